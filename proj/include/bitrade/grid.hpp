#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bitrade/mechanism.hpp"
#include "bitrade/numeric.hpp"
#include "bitrade/valuation.hpp"

namespace bitrade {

// Point-induced grid: sorted coordinate sets (always containing 0 and 1) with
// implicit right/up edges, plus the source multiset with multiplicities.
struct PointGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<Valuation> points;                              // raw multiset
  std::vector<std::pair<Valuation, long long>> weighted;      // deduplicated

  size_t node_count() const { return xs.size() * ys.size(); }
  size_t edge_count() const { return ys.size() * (xs.size() - 1) + xs.size() * (ys.size() - 1); }

  long long multiplicity(const Valuation& v) const {
    for (const auto& [p, m] : weighted)
      if (p == v) return m;
    return 0;
  }
};

// Build from an already weighted multiset (merged on equal points).
inline PointGrid build_grid_weighted(std::vector<std::pair<Valuation, long long>> weighted) {
  PointGrid g;
  std::sort(weighted.begin(), weighted.end(),
            [](const auto& a, const auto& b) { return ValuationLess{}(a.first, b.first); });
  for (const auto& [p, mult] : weighted) {
    require_unit_square(p);
    if (mult <= 0) throw std::invalid_argument("build_grid_weighted: nonpositive multiplicity");
    if (!g.weighted.empty() && g.weighted.back().first == p)
      g.weighted.back().second += mult;
    else
      g.weighted.push_back({p, mult});
  }
  g.xs = {0.0, 1.0};
  g.ys = {0.0, 1.0};
  for (const auto& [p, mult] : g.weighted) {
    g.xs.push_back(p.s);
    g.ys.push_back(p.b);
  }
  auto dedupe = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(g.xs);
  dedupe(g.ys);
  return g;
}

inline PointGrid build_grid(const std::vector<Valuation>& points) {
  std::vector<std::pair<Valuation, long long>> weighted;
  weighted.reserve(points.size());
  for (const auto& p : points) weighted.push_back({p, 1});
  PointGrid g = build_grid_weighted(std::move(weighted));
  g.points = points;
  return g;
}

enum class Orientation { Horizontal, Vertical };

struct GridEdge {
  Valuation from;
  Valuation to;
  Orientation orientation;
};

// Axis-aligned box with per-side open/closed tags.
struct InfluenceRegion {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  bool x_lo_closed = true, x_hi_closed = true, y_lo_closed = true, y_hi_closed = true;

  bool contains(const Valuation& v) const {
    if (x_lo_closed ? v.s < x_lo : v.s <= x_lo) return false;
    if (x_hi_closed ? v.s > x_hi : v.s >= x_hi) return false;
    if (y_lo_closed ? v.b < y_lo : v.b <= y_lo) return false;
    if (y_hi_closed ? v.b > y_hi : v.b >= y_hi) return false;
    return true;
  }
};

struct WeightedRegion {
  double weight = 0.0;
  InfluenceRegion region;
};

// Weight and influence region of a grid edge.  Vertical edge at x spanning
// [u2,v2): region [0,x] x [u2,v2) with weight -x; horizontal edge at y
// spanning [u1,v1): region [u1,v1) x [y,1] with weight y.  The half-open
// extreme becomes closed when it reaches coordinate 1.
inline WeightedRegion edge_weight_and_region(const GridEdge& e) {
  WeightedRegion wr;
  if (e.orientation == Orientation::Vertical) {
    if (e.from.s != e.to.s || !(e.from.b < e.to.b)) throw std::invalid_argument("edge_weight_and_region: malformed vertical edge");
    wr.weight = -e.from.s;
    wr.region = {0.0, e.from.s, e.from.b, e.to.b, true, true, true, e.to.b == 1.0};
  } else {
    if (e.from.b != e.to.b || !(e.from.s < e.to.s)) throw std::invalid_argument("edge_weight_and_region: malformed horizontal edge");
    wr.weight = e.from.b;
    wr.region = {e.from.s, e.to.s, e.from.b, 1.0, true, e.to.s == 1.0, true, true};
  }
  return wr;
}

inline long long count_in_region(const InfluenceRegion& r, const std::vector<Valuation>& points) {
  long long c = 0;
  for (const auto& p : points)
    if (r.contains(p)) ++c;
  return c;
}

// Total profit of a mechanism over a multiset, summed pairwise.
inline double total_profit(const Mechanism& m, const std::vector<Valuation>& points) {
  std::vector<double> vals;
  vals.reserve(points.size());
  for (const auto& p : points) vals.push_back(m.profit(p));
  return pairwise_sum(vals);
}

inline double total_profit_weighted(const Mechanism& m, const std::vector<std::pair<Valuation, long long>>& weighted) {
  std::vector<double> vals;
  vals.reserve(weighted.size());
  for (const auto& [p, mult] : weighted) vals.push_back(static_cast<double>(mult) * m.profit(p));
  return pairwise_sum(vals);
}

// Edge-decomposed total value of a staircase mechanism over a multiset.  The
// sum runs over the boundary's maximal segments plus two terms for the path
// endpoints (the left-edge entry fixes the buyer price of the s = 0 column,
// the top-edge exit fixes the seller price of the b = 1 row); the closure
// handling at segment corners makes the decomposition agree exactly with the
// direct per-point payments on every input, including points that lie on the
// boundary itself.  `trade_bonus` is added once per allocated point (used by
// the joint-ads mirror where every trade contributes the two thresholds).
inline double total_profit_decomposed(const Mechanism& m, const std::vector<Valuation>& points,
                                      double trade_bonus = 0.0) {
  if (m.is_empty()) return 0.0;
  const auto& vs = m.vertices();
  std::vector<double> terms;
  const Valuation first = vs.front();
  const Valuation last = vs.back();
  long long c0 = 0;
  for (const auto& p : points)
    if (p.s == 0.0 && p.b >= first.b) ++c0;
  terms.push_back(first.b * static_cast<double>(c0));
  long long ce = 0;
  for (const auto& p : points)
    if (p.b == 1.0 && p.s <= last.s) ++ce;
  terms.push_back((trade_bonus - last.s) * static_cast<double>(ce));
  for (size_t i = 1; i < vs.size(); ++i) {
    const auto& a = vs[i - 1];
    const auto& b = vs[i];
    long long c = 0;
    if (a.s == b.s) {  // vertical: [0,x] x [b1,b2)
      for (const auto& p : points)
        if (p.s <= a.s && p.b >= a.b && p.b < b.b) ++c;
      terms.push_back((trade_bonus - a.s) * static_cast<double>(c));
    } else {  // horizontal: (s1,s2] x [y,1]
      for (const auto& p : points)
        if (p.s > a.s && p.s <= b.s && p.b >= a.b) ++c;
      terms.push_back(a.b * static_cast<double>(c));
    }
  }
  return pairwise_sum(terms);
}

enum class TieBreak { PreferUp, PreferRight };

struct OptimizerResult {
  Mechanism mechanism;
  double value = 0.0;
};

namespace detail {

struct IndexedPoints {
  // per grid column/row: (other index, multiplicity), sorted
  std::vector<std::vector<std::pair<int, long long>>> col;  // col[i]: (j, mult)
  std::vector<std::vector<std::pair<int, long long>>> row;  // row[j]: (i, mult)
  std::vector<std::vector<long long>> row_prefix;           // prefix sums over row[j]
};

inline int coord_index(const std::vector<double>& c, double v) {
  auto it = std::lower_bound(c.begin(), c.end(), v);
  return static_cast<int>(it - c.begin());
}

inline IndexedPoints index_points(const PointGrid& g) {
  IndexedPoints ip;
  ip.col.resize(g.xs.size());
  ip.row.resize(g.ys.size());
  for (const auto& [p, mult] : g.weighted) {
    int i = coord_index(g.xs, p.s);
    int j = coord_index(g.ys, p.b);
    ip.col[i].push_back({j, mult});
    ip.row[j].push_back({i, mult});
  }
  for (auto& c : ip.col) std::sort(c.begin(), c.end());
  ip.row_prefix.resize(ip.row.size());
  for (size_t j = 0; j < ip.row.size(); ++j) {
    std::sort(ip.row[j].begin(), ip.row[j].end());
    ip.row_prefix[j].resize(ip.row[j].size() + 1, 0);
    for (size_t k = 0; k < ip.row[j].size(); ++k)
      ip.row_prefix[j][k + 1] = ip.row_prefix[j][k] + ip.row[j][k].second;
  }
  return ip;
}

// multiplicity of points in row j with column index <= i
inline long long row_count_up_to(const IndexedPoints& ip, int j, int i) {
  const auto& r = ip.row[static_cast<size_t>(j)];
  auto it = std::upper_bound(r.begin(), r.end(), std::make_pair(i, std::numeric_limits<long long>::max()));
  return ip.row_prefix[static_cast<size_t>(j)][static_cast<size_t>(it - r.begin())];
}

// multiplicity of points in column i with row index >= j
inline long long col_count_from(const IndexedPoints& ip, int i, int j) {
  const auto& c = ip.col[static_cast<size_t>(i)];
  long long total = 0;
  auto it = std::lower_bound(c.begin(), c.end(), std::make_pair(j, std::numeric_limits<long long>::min()));
  for (; it != c.end(); ++it) total += it->second;
  return total;
}

}  // namespace detail

// Exact empirical maximizer by shortest-path dynamic programming over the
// point-induced grid, processed column by column in topological order.  Edge
// contributions are counted from per-row/per-column cumulative tables, O(1)
// amortized per node.  Reconstruction uses checkpointed replay so memory stays
// O((W/K + K) * H) even on very large grids.
inline OptimizerResult empirical_optimum_on_grid(const PointGrid& g, bool restrict_to_upper_triangle,
                                                 TieBreak tie_break = TieBreak::PreferUp, double trade_bonus = 0.0) {
  const auto& xs = g.xs;
  const auto& ys = g.ys;
  const int W = static_cast<int>(xs.size());
  const int H = static_cast<int>(ys.size());
  const double NEG = -std::numeric_limits<double>::infinity();
  detail::IndexedPoints ip = detail::index_points(g);

  auto valid = [&](int i, int j) { return !restrict_to_upper_triangle || xs[static_cast<size_t>(i)] <= ys[static_cast<size_t>(j)]; };

  // cnt_row[j] must hold the multiplicity of row j over columns <= i when
  // column i is processed (vertical influence [0,x] is closed at x).
  auto add_column_counts = [&](int i, std::vector<long long>& cnt_row) {
    for (const auto& [j, mult] : ip.col[static_cast<size_t>(i)]) cnt_row[static_cast<size_t>(j)] += mult;
  };

  auto compute_column = [&](int i, const std::vector<double>* dp_prev, std::vector<long long>& cnt_row,
                            std::vector<double>& dp) {
    add_column_counts(i, cnt_row);
    const auto& cpts = ip.col[static_cast<size_t>(i)];
    // base pass (descending rows): start values in column 0, otherwise the
    // horizontal edge from the previous column
    long long suffix = 0;
    size_t cp = cpts.size();
    for (int j = H - 1; j >= 0; --j) {
      while (cp > 0 && cpts[cp - 1].first >= j) {
        suffix += cpts[cp - 1].second;
        --cp;
      }
      if (!valid(i, j)) {
        dp[static_cast<size_t>(j)] = NEG;
        continue;
      }
      if (i == 0)
        dp[static_cast<size_t>(j)] = ys[static_cast<size_t>(j)] * static_cast<double>(suffix);
      else
        dp[static_cast<size_t>(j)] = (*dp_prev)[static_cast<size_t>(j)] == NEG
                                         ? NEG
                                         : (*dp_prev)[static_cast<size_t>(j)] + ys[static_cast<size_t>(j)] * static_cast<double>(suffix);
    }
    // vertical pass (ascending rows)
    const bool down_on_tie = (i == 0) ? (tie_break == TieBreak::PreferRight) : (tie_break == TieBreak::PreferUp);
    const double col_w = trade_bonus - xs[static_cast<size_t>(i)];
    for (int j = 1; j < H; ++j) {
      if (!valid(i, j) || dp[static_cast<size_t>(j - 1)] == NEG) continue;
      double cand = dp[static_cast<size_t>(j - 1)] + col_w * static_cast<double>(cnt_row[static_cast<size_t>(j - 1)]);
      double base = dp[static_cast<size_t>(j)];
      if (base == NEG || cand > base || (cand == base && down_on_tie)) dp[static_cast<size_t>(j)] = cand;
    }
  };

  const int K = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(W))) + 1, 4, 1024);
  std::vector<std::vector<double>> snaps;  // dp after columns 0, K, 2K, ...

  std::vector<double> dp(static_cast<size_t>(H)), dp_prev(static_cast<size_t>(H));
  std::vector<long long> cnt_row(static_cast<size_t>(H), 0);
  int best_i = -1;
  double best_val = NEG;
  for (int i = 0; i < W; ++i) {
    compute_column(i, i == 0 ? nullptr : &dp_prev, cnt_row, dp);
    if (i % K == 0) snaps.push_back(dp);
    double top = dp[static_cast<size_t>(H - 1)];
    if (top != NEG) {
      double cand = top + (trade_bonus - xs[static_cast<size_t>(i)]) * static_cast<double>(detail::row_count_up_to(ip, H - 1, i));
      bool take = best_i < 0 || cand > best_val || (cand == best_val && tie_break == TieBreak::PreferRight);
      if (take) {
        best_val = cand;
        best_i = i;
      }
    }
    std::swap(dp, dp_prev);
  }

  // --- reconstruction -------------------------------------------------------
  // Walk backwards re-deciding each node's parent with the same tie rule the
  // forward pass used; dp columns are replayed window by window from the
  // nearest snapshot.
  auto cnt_row_at = [&](int j, int i) { return detail::row_count_up_to(ip, j, i); };
  auto h_weight = [&](int i, int j) { return ys[static_cast<size_t>(j)] * static_cast<double>(detail::col_count_from(ip, i, j)); };
  auto v_cand = [&](int i, int j, double dp_below) {
    return dp_below + (trade_bonus - xs[static_cast<size_t>(i)]) * static_cast<double>(cnt_row_at(j - 1, i));
  };

  std::vector<std::pair<int, int>> rpath;
  int ci = best_i, cj = H - 1;
  std::vector<std::vector<double>> window;
  std::vector<double> before_window;  // dp column ws-1 (when ws > 0)
  std::vector<double> roll(static_cast<size_t>(H)), roll_prev(static_cast<size_t>(H));
  while (true) {
    const int ws = std::max(0, ci - K + 1);
    std::vector<long long> cnt2(static_cast<size_t>(H), 0);
    std::vector<double>* prev_ptr = nullptr;
    if (ws > 0) {
      int snap_col = ((ws - 1) / K) * K;
      roll_prev = snaps[static_cast<size_t>(snap_col / K)];
      for (int j = 0; j < H; ++j) cnt2[static_cast<size_t>(j)] = cnt_row_at(j, snap_col);
      for (int i = snap_col + 1; i <= ws - 1; ++i) {
        compute_column(i, &roll_prev, cnt2, roll);
        std::swap(roll, roll_prev);
      }
      before_window = roll_prev;
      prev_ptr = &before_window;
    }
    window.assign(static_cast<size_t>(ci - ws + 1), {});
    window[0].resize(static_cast<size_t>(H));
    compute_column(ws, prev_ptr, cnt2, window[0]);
    for (int i = ws + 1; i <= ci; ++i) {
      window[static_cast<size_t>(i - ws)].resize(static_cast<size_t>(H));
      compute_column(i, &window[static_cast<size_t>(i - ws - 1)], cnt2, window[static_cast<size_t>(i - ws)]);
    }

    bool done = false;
    while (true) {
      rpath.push_back({ci, cj});
      const auto& cur = window[static_cast<size_t>(ci - ws)];
      const bool down_on_tie = (ci == 0) ? (tie_break == TieBreak::PreferRight) : (tie_break == TieBreak::PreferUp);
      double base;
      if (ci == 0) {
        base = ys[static_cast<size_t>(cj)] * static_cast<double>(detail::col_count_from(ip, 0, cj));
      } else {
        const auto& prev = ci - 1 >= ws ? window[static_cast<size_t>(ci - ws - 1)] : before_window;
        base = prev[static_cast<size_t>(cj)] == NEG ? NEG : prev[static_cast<size_t>(cj)] + h_weight(ci, cj);
      }
      bool take_down = false;
      if (cj > 0 && valid(ci, cj - 1) && cur[static_cast<size_t>(cj - 1)] != NEG) {
        double cand = v_cand(ci, cj, cur[static_cast<size_t>(cj - 1)]);
        take_down = base == NEG || cand > base || (cand == base && down_on_tie);
      }
      if (take_down) {
        --cj;
        continue;
      }
      if (ci == 0) {
        done = true;  // path starts here
        break;
      }
      --ci;
      if (ci < ws) break;  // continue in the previous window
    }
    if (done) break;
  }

  std::reverse(rpath.begin(), rpath.end());
  std::vector<Valuation> verts;
  verts.reserve(rpath.size());
  for (auto [i, j] : rpath) verts.push_back({xs[static_cast<size_t>(i)], ys[static_cast<size_t>(j)]});
  return {Mechanism::from_vertices(std::move(verts)), best_val};
}

inline OptimizerResult empirical_optimum_full(const std::vector<Valuation>& points, bool restrict_to_upper_triangle,
                                              TieBreak tie_break = TieBreak::PreferUp, double trade_bonus = 0.0) {
  return empirical_optimum_on_grid(build_grid(points), restrict_to_upper_triangle, tie_break, trade_bonus);
}

inline OptimizerResult empirical_optimum_weighted(const std::vector<std::pair<Valuation, long long>>& weighted,
                                                  bool restrict_to_upper_triangle, TieBreak tie_break = TieBreak::PreferUp,
                                                  double trade_bonus = 0.0) {
  return empirical_optimum_on_grid(build_grid_weighted(weighted), restrict_to_upper_triangle, tie_break, trade_bonus);
}

inline Mechanism empirical_optimum(const std::vector<Valuation>& points, bool restrict_to_upper_triangle,
                                   TieBreak tie_break = TieBreak::PreferUp) {
  return empirical_optimum_full(points, restrict_to_upper_triangle, tie_break).mechanism;
}

// --- path enumeration -------------------------------------------------------

// Streams every complete path (as the raw node sequence) through the callback.
// Guarded: enumeration is only intended for small grids.
inline void enumerate_complete_paths(const PointGrid& g, const std::function<void(const std::vector<Valuation>&)>& emit) {
  const int W = static_cast<int>(g.xs.size());
  const int H = static_cast<int>(g.ys.size());
  if (static_cast<long long>(W) * H > 200) throw std::length_error("enumerate_complete_paths: grid too large");
  std::vector<Valuation> path;
  std::function<void(int, int)> dfs = [&](int i, int j) {
    path.push_back({g.xs[static_cast<size_t>(i)], g.ys[static_cast<size_t>(j)]});
    if (j == H - 1) emit(path);
    if (i + 1 < W) dfs(i + 1, j);
    if (j + 1 < H) dfs(i, j + 1);
    path.pop_back();
  };
  for (int j = 0; j < H; ++j) dfs(0, j);
}

// Debug dump of a grid: coordinate sets plus every edge with its weight and
// the sample count inside its influence region.
inline nlohmann::json grid_debug_json(const PointGrid& g) {
  nlohmann::json j;
  nlohmann::json xs = nlohmann::json::array(), ys = nlohmann::json::array();
  for (double x : g.xs) xs.push_back(exact_decimal(x));
  for (double y : g.ys) ys.push_back(exact_decimal(y));
  j["xs"] = xs;
  j["ys"] = ys;
  nlohmann::json weights = nlohmann::json::array();
  auto emit = [&](const GridEdge& e) {
    WeightedRegion wr = edge_weight_and_region(e);
    long long cnt = 0;
    for (const auto& [p, mult] : g.weighted)
      if (wr.region.contains(p)) cnt += mult;
    weights.push_back({{"from", {exact_decimal(e.from.s), exact_decimal(e.from.b)}},
                       {"to", {exact_decimal(e.to.s), exact_decimal(e.to.b)}},
                       {"orientation", e.orientation == Orientation::Horizontal ? "h" : "v"},
                       {"weight", wr.weight},
                       {"count", cnt}});
  };
  for (size_t jy = 0; jy < g.ys.size(); ++jy)
    for (size_t ix = 0; ix + 1 < g.xs.size(); ++ix)
      emit({{g.xs[ix], g.ys[jy]}, {g.xs[ix + 1], g.ys[jy]}, Orientation::Horizontal});
  for (size_t ix = 0; ix < g.xs.size(); ++ix)
    for (size_t jy = 0; jy + 1 < g.ys.size(); ++jy)
      emit({{g.xs[ix], g.ys[jy]}, {g.xs[ix], g.ys[jy + 1]}, Orientation::Vertical});
  j["weights"] = weights;
  return j;
}

// Closed-form count of complete paths: sum over start row and end column of
// the monotone lattice path count.
inline unsigned long long count_complete_paths(const PointGrid& g) {
  const int W = static_cast<int>(g.xs.size());
  const int H = static_cast<int>(g.ys.size());
  auto binom = [](int n, int k) {
    unsigned long long r = 1;
    for (int t = 1; t <= k; ++t) r = r * static_cast<unsigned long long>(n - k + t) / static_cast<unsigned long long>(t);
    return r;
  };
  unsigned long long total = 0;
  for (int j = 0; j < H; ++j)
    for (int i = 0; i < W; ++i) total += binom(i + (H - 1 - j), i);
  return total;
}

}  // namespace bitrade
