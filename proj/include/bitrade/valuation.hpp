#pragma once

#include <stdexcept>

namespace bitrade {

// A seller/buyer valuation pair in the unit square.  Coordinates are doubles
// holding finite binary values; comparisons are exact, never tolerance-based.
struct Valuation {
  double s = 0.0;  // seller value
  double b = 0.0;  // buyer value

  bool operator==(const Valuation&) const = default;
};

inline bool in_unit_square(const Valuation& v) {
  return v.s >= 0.0 && v.s <= 1.0 && v.b >= 0.0 && v.b <= 1.0;
}

inline void require_unit_square(const Valuation& v) {
  if (!in_unit_square(v)) throw std::invalid_argument("valuation outside the unit square");
}

// u is dominated by v (u "precedes" v): lowering the seller coordinate and
// raising the buyer coordinate preserves allocation.
inline bool dominated_by(const Valuation& u, const Valuation& v) {
  return u.s >= v.s && u.b <= v.b;
}

// Upper-left triangle: seller value at most buyer value (closed).
inline bool in_upper_triangle(const Valuation& v) { return v.s <= v.b; }

struct ValuationLess {
  bool operator()(const Valuation& a, const Valuation& b) const {
    if (a.s != b.s) return a.s < b.s;
    return a.b < b.b;
  }
};

}  // namespace bitrade
