#pragma once

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitrade {

// Exact rational arithmetic for expectations and cross-checks.  Coordinates
// everywhere else are doubles holding dyadic values, so conversion to and
// from Rational is lossless.
using Rational = boost::rational<long long>;

inline Rational rational_from_double(double x) {
  if (!(x >= -1.0 && x <= 2.0)) throw std::invalid_argument("rational_from_double: out of range");
  if (x == 0.0) return Rational(0);
  bool neg = x < 0;
  double a = neg ? -x : x;
  int e = 0;
  double m = std::frexp(a, &e);  // a = m * 2^e, m in [0.5, 1)
  auto num = static_cast<long long>(std::ldexp(m, 53));
  int k = 53 - e;  // a = num / 2^k
  while (k > 0 && (num & 1LL) == 0) {
    num >>= 1;
    --k;
  }
  if (k > 62) throw std::invalid_argument("rational_from_double: denominator exceeds 2^62");
  Rational r = k >= 0 ? Rational(num, 1LL << k) : Rational(num << -k);
  return neg ? -r : r;
}

inline double rational_to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Renders the exact decimal expansion of a double in [0, 1].  Every binary
// fraction has a finite decimal form, so no rounding is involved.
inline std::string exact_decimal(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("exact_decimal: value outside [0,1]");
  if (x == 0.0) return "0";
  if (x == 1.0) return "1";
  int e = 0;
  double m = std::frexp(x, &e);
  auto num = static_cast<unsigned long long>(std::ldexp(m, 53));
  int k = 53 - e;  // x = num / 2^k, k >= 1 for x in (0,1)
  while (k > 0 && (num & 1ULL) == 0) {
    num >>= 1;
    --k;
  }
  std::string out = "0.";
  unsigned __int128 n = num;
  const unsigned __int128 den = (unsigned __int128)1 << k;
  while (n != 0) {
    n *= 10;
    out.push_back(static_cast<char>('0' + static_cast<int>(n / den)));
    n %= den;
  }
  return out;
}

// Parses a decimal string produced by exact_decimal (strtod rounds to
// nearest, which is exact for representable values).
inline double parse_exact_decimal(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || (end && *end != '\0')) throw std::invalid_argument("parse_exact_decimal: bad number '" + s + "'");
  return v;
}

// Dyadic precision 2^-h used by the simplification grid.
struct DyadicPrecision {
  int h = 0;  // epsilon = 2^-h
  double eps() const { return std::ldexp(1.0, -h); }
  bool operator==(const DyadicPrecision&) const = default;
};

// Pairwise (cascade) summation.  With dyadic inputs of bounded precision the
// result is exact regardless of association; pairwise keeps general inputs
// well conditioned too.
inline double pairwise_sum(std::span<const double> v) {
  if (v.empty()) return 0.0;
  if (v.size() == 1) return v[0];
  if (v.size() == 2) return v[0] + v[1];
  size_t mid = v.size() / 2;
  return pairwise_sum(v.subspan(0, mid)) + pairwise_sum(v.subspan(mid));
}

// --- deterministic RNG helpers -------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (a + 1)) ^ (0xc2b2ae3d27d4eb4fULL * (b + 1));
  splitmix64(s);
  return splitmix64(s);
}

// Small xoshiro-free engine: splitmix stream, enough for simulation draws
// and portable across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed ^ 0x853c49e6748fea9bULL) {}

  std::uint64_t next() { return splitmix64(state_); }

  // Uniform in [0, n) by rejection; exact and portable.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  bool coin() { return (next() >> 63) != 0; }

  // Dyadic draw k/2^bits in [0,1); exact as a double for bits <= 53.
  double dyadic(int bits = 40) { return std::ldexp(static_cast<double>(next() >> (64 - bits)), -bits); }

 private:
  std::uint64_t state_;
};

// FNV-1a over a canonical string; used to fingerprint configurations.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace bitrade
