#pragma once

// Shared helpers for the test suites: random staircase generators, dyadic
// point factories, and small brute-force oracles kept independent of the
// library's optimized paths.

#include <algorithm>
#include <vector>

#include "bitrade/grid.hpp"
#include "bitrade/mechanism.hpp"
#include "bitrade/numeric.hpp"
#include "bitrade/valuation.hpp"

namespace testsupport {

using bitrade::Mechanism;
using bitrade::Rng;
using bitrade::Valuation;

// dyadic coordinate with `bits` fractional bits
inline double dyadic_coord(Rng& rng, int bits = 8) {
  return std::ldexp(static_cast<double>(rng.below(1ULL << bits)), -bits);
}

inline Valuation random_point(Rng& rng, int bits = 8) { return {dyadic_coord(rng, bits), dyadic_coord(rng, bits)}; }

inline Valuation random_point_in_U(Rng& rng, int bits = 8) {
  for (;;) {
    Valuation v = random_point(rng, bits);
    if (v.s <= v.b) return v;
  }
}

inline std::vector<Valuation> random_points(Rng& rng, size_t n, int bits = 8) {
  std::vector<Valuation> pts;
  for (size_t i = 0; i < n; ++i) pts.push_back(random_point(rng, bits));
  return pts;
}

// Random canonical staircase as the rectangle union of random points; with
// inside_U the generators are drawn from the closed upper triangle, which
// keeps every boundary vertex at s <= b.
inline Mechanism random_staircase(Rng& rng, int max_generators = 6, int bits = 8, bool inside_U = false) {
  size_t n = 1 + rng.below(static_cast<std::uint64_t>(max_generators));
  std::vector<Valuation> pts;
  for (size_t i = 0; i < n; ++i) pts.push_back(inside_U ? random_point_in_U(rng, bits) : random_point(rng, bits));
  return bitrade::rectangle_union_mechanism(pts);
}

// Brute-force membership: some generator of the rectangle union dominates v.
inline bool brute_union_contains(const std::vector<Valuation>& gens, const Valuation& v) {
  for (const auto& g : gens)
    if (bitrade::dominated_by(g, v)) return true;
  return false;
}

// Independent recursive complete-path counter (memoized), used as the oracle
// against the closed-form count.
inline unsigned long long recursive_path_count(int W, int H) {
  std::vector<std::vector<unsigned long long>> memo(static_cast<size_t>(W), std::vector<unsigned long long>(static_cast<size_t>(H), 0));
  // paths_from(i,j) = number of complete paths starting at node (i,j)
  for (int i = W - 1; i >= 0; --i)
    for (int j = H - 1; j >= 0; --j) {
      unsigned long long c = j == H - 1 ? 1 : 0;  // stop here if on the top edge
      if (i + 1 < W) c += memo[static_cast<size_t>(i + 1)][static_cast<size_t>(j)];
      if (j + 1 < H) c += memo[static_cast<size_t>(i)][static_cast<size_t>(j + 1)];
      memo[static_cast<size_t>(i)][static_cast<size_t>(j)] = c;
    }
  unsigned long long total = 0;
  for (int j = 0; j < H; ++j) total += memo[0][static_cast<size_t>(j)];
  return total;
}

// Brute-force empirical optimum: enumerate every complete path and evaluate
// the direct per-point payments.  Independent of the DP route.
inline double brute_force_optimum(const std::vector<Valuation>& pts) {
  bitrade::PointGrid g = bitrade::build_grid(pts);
  double best = -1e300;
  bitrade::enumerate_complete_paths(g, [&](const std::vector<Valuation>& path) {
    Mechanism m = Mechanism::from_vertices(path);
    best = std::max(best, bitrade::total_profit(m, pts));
  });
  return best;
}

}  // namespace testsupport
