#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bitrade/mechanism.hpp"
#include "bitrade/numeric.hpp"
#include "bitrade/valuation.hpp"

namespace bitrade {

enum class LineAxis { X, Y };

struct IntersectionPoint {
  Valuation p;
  int segment = 0;        // index of the boundary segment that produced it
  LineAxis axis = LineAxis::X;
  long long line = 0;     // grid line index: x = line * eps or y = line * eps
};

// Ordered intersections of a staircase boundary with the uniform dyadic grid,
// following the boundary's left-to-right, bottom-up parametrization.  On a
// segment shared with a grid line only the first and last shared points
// appear; crossings of perpendicular lines are kept.
struct IntersectionList {
  std::vector<IntersectionPoint> points;
};

namespace detail {

// exact test for v being a multiple of 2^-h, with the multiple returned
inline bool dyadic_index(double v, int h, long long& idx) {
  double scaled = std::ldexp(v, h);
  double r = std::nearbyint(scaled);
  if (scaled != r) return false;
  idx = static_cast<long long>(r);
  return true;
}

inline long long ceil_index(double v, int h) {
  double scaled = std::ldexp(v, h);
  return static_cast<long long>(std::ceil(scaled));
}

inline long long floor_index(double v, int h) {
  double scaled = std::ldexp(v, h);
  return static_cast<long long>(std::floor(scaled));
}

}  // namespace detail

inline IntersectionList boundary_intersections(const Mechanism& m, DyadicPrecision prec) {
  if (m.is_empty()) throw std::invalid_argument("boundary_intersections: EMPTY mechanism");
  const auto& vs = m.vertices();
  const int h = prec.h;
  IntersectionList out;
  auto push = [&](Valuation p, int seg, LineAxis ax, long long line) {
    if (!out.points.empty() && out.points.back().p == p) return;  // dedupe shared corners
    out.points.push_back({p, seg, ax, line});
  };

  if (vs.size() == 1) {
    // single-vertex boundary (0,1): it sits on both extreme grid lines
    push(vs[0], -1, LineAxis::X, 0);
    return out;
  }

  for (size_t i = 1; i < vs.size(); ++i) {
    const auto& a = vs[i - 1];
    const auto& b = vs[i];
    const int seg = static_cast<int>(i) - 1;
    std::vector<IntersectionPoint> local;
    if (a.s == b.s) {  // vertical segment {s} x [a.b, b.b]
      long long xi = 0;
      if (detail::dyadic_index(a.s, h, xi)) {
        local.push_back({{a.s, a.b}, seg, LineAxis::X, xi});
        local.push_back({{a.s, b.b}, seg, LineAxis::X, xi});
      }
      for (long long j = detail::ceil_index(a.b, h); j <= detail::floor_index(b.b, h); ++j)
        local.push_back({{a.s, std::ldexp(static_cast<double>(j), -h)}, seg, LineAxis::Y, j});
      std::sort(local.begin(), local.end(), [](const IntersectionPoint& u, const IntersectionPoint& v) { return u.p.b < v.p.b; });
    } else {  // horizontal segment [a.s, b.s] x {y}
      long long yi = 0;
      if (detail::dyadic_index(a.b, h, yi)) {
        local.push_back({{a.s, a.b}, seg, LineAxis::Y, yi});
        local.push_back({{b.s, a.b}, seg, LineAxis::Y, yi});
      }
      for (long long i2 = detail::ceil_index(a.s, h); i2 <= detail::floor_index(b.s, h); ++i2)
        local.push_back({{std::ldexp(static_cast<double>(i2), -h), a.b}, seg, LineAxis::X, i2});
      std::sort(local.begin(), local.end(), [](const IntersectionPoint& u, const IntersectionPoint& v) { return u.p.s < v.p.s; });
    }
    for (const auto& ipt : local) push(ipt.p, ipt.segment, ipt.axis, ipt.line);
  }
  return out;
}

// The simplified mechanism: intersection points joined either directly (when
// they share a coordinate) or through the south-east corner, which enlarges
// the allocation region and lowers per-trade profit by at most 2*eps.
inline Mechanism simplify(const Mechanism& m, DyadicPrecision prec) {
  if (m.is_empty()) throw std::invalid_argument("simplify: EMPTY mechanism");
  IntersectionList list = boundary_intersections(m, prec);
  const auto& pts = list.points;
  std::vector<Valuation> verts;
  verts.push_back(pts.front().p);
  for (size_t i = 1; i < pts.size(); ++i) {
    const Valuation& a = pts[i - 1].p;
    const Valuation& b = pts[i].p;
    if (a.s != b.s && a.b != b.b) verts.push_back({b.s, a.b});
    verts.push_back(b);
  }
  return Mechanism::from_vertices(std::move(verts));
}

// phi_h(M): the approximating sequence at precision 2^-h.
inline Mechanism approximate(const Mechanism& m, int h) {
  if (h < 0) throw std::invalid_argument("approximate: negative level");
  return simplify(m, DyadicPrecision{h});
}

// Coordinate sets of the simplification grid: the uniform dyadic diagonal
// points together with the boundary intersections.  Simplifying a mechanism
// preserves these sets exactly.
inline std::pair<std::vector<double>, std::vector<double>> simplification_grid_coords(const Mechanism& m,
                                                                                      DyadicPrecision prec) {
  IntersectionList list = boundary_intersections(m, prec);
  std::vector<double> xs, ys;
  for (long long i = 0; i <= (1LL << prec.h); ++i) {
    xs.push_back(std::ldexp(static_cast<double>(i), -prec.h));
    ys.push_back(std::ldexp(static_cast<double>(i), -prec.h));
  }
  for (const auto& ipt : list.points) {
    xs.push_back(ipt.p.s);
    ys.push_back(ipt.p.b);
  }
  auto dedupe = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(xs);
  dedupe(ys);
  return {xs, ys};
}

}  // namespace bitrade
