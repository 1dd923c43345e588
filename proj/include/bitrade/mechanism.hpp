#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitrade/numeric.hpp"
#include "bitrade/valuation.hpp"

namespace bitrade {

// Payments attached to a trade: p is paid to the seller, q by the buyer.
struct PaymentPair {
  double p = 0.0;
  double q = 0.0;
  bool operator==(const PaymentPair&) const = default;
};

// A mechanism is encoded by the boundary of its allocation region: a monotone
// axis-parallel staircase running from the left edge of the unit square to the
// top edge.  The allocation region is the set of valuations dominated by some
// boundary point (closed region).  An empty vertex list is the distinguished
// EMPTY mechanism that never trades.
class Mechanism {
 public:
  Mechanism() = default;

  static Mechanism empty() { return Mechanism(); }

  // Canonicalizes and validates: merges collinear segments, drops zero-length
  // steps, and requires a monotone path from (0, b0) to (s_end, 1).
  static Mechanism from_vertices(std::vector<Valuation> vs) {
    Mechanism m;
    m.boundary_ = canonicalize(std::move(vs));
    return m;
  }

  // Fixed-price mechanism with allocation region [0,p] x [p,1].
  static Mechanism fixed_price(double p) {
    return from_vertices({{0.0, p}, {p, p}, {p, 1.0}});
  }

  // Rectangle region [0, s_max] x [b_min, 1].
  static Mechanism rectangle(double s_max, double b_min) {
    return from_vertices({{0.0, b_min}, {s_max, b_min}, {s_max, 1.0}});
  }

  bool is_empty() const { return boundary_.empty(); }
  const std::vector<Valuation>& vertices() const { return boundary_; }

  bool operator==(const Mechanism&) const = default;

  // Largest seller coordinate on the boundary at buyer height <= b, or a
  // negative sentinel when the height is below the whole boundary.
  double max_seller_at(double b) const {
    // vertices are sorted by non-decreasing b; the last one with v.b <= b has
    // the largest s because s is non-decreasing along the path.
    auto it = std::upper_bound(boundary_.begin(), boundary_.end(), b,
                               [](double x, const Valuation& v) { return x < v.b; });
    if (it == boundary_.begin()) return -1.0;
    return std::prev(it)->s;
  }

  // Smallest buyer coordinate on the boundary at seller coordinate >= s, or a
  // sentinel > 1 when no boundary point lies that far right.
  double min_buyer_at(double s) const {
    auto it = std::lower_bound(boundary_.begin(), boundary_.end(), s,
                               [](const Valuation& v, double x) { return v.s < x; });
    if (it == boundary_.end()) return 2.0;
    return it->b;
  }

  bool contains(const Valuation& v) const {
    if (boundary_.empty()) return false;
    return max_seller_at(v.b) >= v.s;
  }

  std::optional<PaymentPair> payments(const Valuation& v) const {
    if (!contains(v)) return std::nullopt;
    return PaymentPair{max_seller_at(v.b), min_buyer_at(v.s)};
  }

  double profit(const Valuation& v) const {
    auto pq = payments(v);
    return pq ? pq->q - pq->p : 0.0;
  }

 private:
  static std::vector<Valuation> canonicalize(std::vector<Valuation> vs) {
    if (vs.empty()) return vs;
    for (const auto& v : vs) require_unit_square(v);
    // drop consecutive duplicates
    std::vector<Valuation> pts;
    for (const auto& v : vs) {
      if (pts.empty() || !(pts.back() == v)) pts.push_back(v);
    }
    // validate monotone axis-parallel steps
    for (size_t i = 1; i < pts.size(); ++i) {
      const auto& a = pts[i - 1];
      const auto& b = pts[i];
      bool vertical = a.s == b.s && a.b < b.b;
      bool horizontal = a.b == b.b && a.s < b.s;
      if (!vertical && !horizontal) throw std::invalid_argument("boundary must move right or up in axis-parallel steps");
    }
    // merge collinear runs
    std::vector<Valuation> out;
    for (const auto& v : pts) {
      if (out.size() >= 2) {
        const auto& a = out[out.size() - 2];
        auto& m = out[out.size() - 1];
        if ((a.s == m.s && m.s == v.s) || (a.b == m.b && m.b == v.b)) {
          m = v;
          continue;
        }
      }
      out.push_back(v);
    }
    if (out.front().s != 0.0) throw std::invalid_argument("boundary must start on the left edge");
    if (out.back().b != 1.0) throw std::invalid_argument("boundary must end on the top edge");
    return out;
  }

  std::vector<Valuation> boundary_;
};

inline bool contains(const Mechanism& m, const Valuation& v) { return m.contains(v); }
inline std::optional<PaymentPair> payments(const Mechanism& m, const Valuation& v) { return m.payments(v); }
inline double profit(const Mechanism& m, const Valuation& v) { return m.profit(v); }

// Gain-from-trade and social welfare of a single interaction.
struct EfficiencyMetrics {
  double gft = 0.0;
  double sw = 0.0;
};

inline EfficiencyMetrics efficiency_metrics(const Mechanism& m, const Valuation& v) {
  double g = m.contains(v) ? v.b - v.s : 0.0;
  return {g, g + v.s};
}

enum class BudgetBalance { Strong, Weak, None };

// Classifies a mechanism by the payments at valuation (0,1): strong budget
// balance holds exactly for fixed-price regions, weak iff the seller-side
// price never exceeds the buyer-side one.
inline BudgetBalance budget_balance_class(const Mechanism& m) {
  if (m.is_empty()) throw std::invalid_argument("budget_balance_class: EMPTY mechanism has no (0,1) trade");
  const auto& vs = m.vertices();
  double s_bar = m.max_seller_at(1.0);
  double b_under = m.min_buyer_at(0.0);
  bool strong = false;
  if (vs.size() == 3 && vs[1].s == vs[1].b) strong = true;
  if (vs.size() == 2 && vs[0] == Valuation{0.0, 0.0}) strong = true;                       // price 0
  if (vs.size() == 2 && vs[0] == Valuation{0.0, 1.0} && vs[1] == Valuation{1.0, 1.0}) strong = true;  // price 1
  if (strong) return BudgetBalance::Strong;
  return s_bar <= b_under ? BudgetBalance::Weak : BudgetBalance::None;
}

// Intersects the allocation region with the upper-left triangle {s <= b}.
// Below-diagonal excursions of the boundary are replaced by the corner path
// through (t,t) -> (t,u) -> (u,u); the result never trades at a loss where the
// input did and pointwise dominates it in profit.
inline Mechanism restrict_to_U(const Mechanism& m) {
  if (m.is_empty()) return m;
  const auto& vs = m.vertices();
  auto below = [](const Valuation& v) { return v.s > v.b; };

  // insert diagonal crossing points so transitions happen at s == b vertices
  std::vector<Valuation> pts;
  for (size_t i = 0; i < vs.size(); ++i) {
    pts.push_back(vs[i]);
    if (i + 1 == vs.size()) break;
    const auto& a = vs[i];
    const auto& b = vs[i + 1];
    if (a.s == b.s) {  // vertical
      if (a.b < a.s && a.s < b.b) pts.push_back({a.s, a.s});
    } else {  // horizontal
      if (a.s < a.b && a.b < b.s) pts.push_back({a.b, a.b});
    }
  }

  std::vector<Valuation> out;
  size_t i = 0;
  while (i < pts.size()) {
    if (!below(pts[i])) {
      out.push_back(pts[i]);
      ++i;
      continue;
    }
    // maximal below-diagonal run; bracketed by on-diagonal points
    if (out.empty() || out.back().s != out.back().b) throw std::logic_error("restrict_to_U: unexpected boundary shape");
    double t = out.back().s;
    while (i < pts.size() && below(pts[i])) ++i;
    if (i >= pts.size()) throw std::logic_error("restrict_to_U: boundary ended below the diagonal");
    double u = pts[i].s;  // re-entry point lies on the diagonal
    out.push_back({t, u});
    // the loop pushes the re-entry vertex (u,u) itself next iteration
  }
  return Mechanism::from_vertices(std::move(out));
}

// Minimal monotone region containing every input point: the union of the
// dominance rectangles [0, v.s] x [v.b, 1].
inline Mechanism rectangle_union_mechanism(const std::vector<Valuation>& points) {
  if (points.empty()) throw std::invalid_argument("rectangle_union_mechanism: empty point set");
  for (const auto& p : points) require_unit_square(p);
  std::vector<Valuation> sorted = points;
  std::sort(sorted.begin(), sorted.end(), [](const Valuation& a, const Valuation& b) {
    if (a.s != b.s) return a.s > b.s;
    return a.b < b.b;
  });
  // SE frontier: scanning s from high to low, keep points with strictly
  // decreasing b; dropped ones have their rectangle contained in a kept one.
  std::vector<Valuation> frontier;
  double min_b = 2.0;
  for (const auto& p : sorted) {
    if (p.b < min_b) {
      frontier.push_back(p);
      min_b = p.b;
    }
  }
  std::reverse(frontier.begin(), frontier.end());  // s ascending, b ascending
  std::vector<Valuation> verts;
  verts.push_back({0.0, frontier.front().b});
  for (size_t i = 0; i < frontier.size(); ++i) {
    verts.push_back(frontier[i]);
    double next_b = i + 1 < frontier.size() ? frontier[i + 1].b : 1.0;
    verts.push_back({frontier[i].s, next_b});
  }
  return Mechanism::from_vertices(std::move(verts));
}

// Staircase hugging an ascending segment from the north-west at the given
// resolution, with a notch excised around each sample so every sample point
// falls outside the allocation region.  Overlapping notches are merged.
inline Mechanism notched_staircase_mechanism(const Valuation& seg_a, const Valuation& seg_b,
                                             const std::vector<Valuation>& samples,
                                             double notch_half_width, double resolution) {
  require_unit_square(seg_a);
  require_unit_square(seg_b);
  if (!(seg_a.s < seg_b.s) || !(seg_a.b < seg_b.b)) throw std::invalid_argument("notched_staircase: segment must ascend");
  if (!(notch_half_width > 0.0) || !(resolution > 0.0)) throw std::invalid_argument("notched_staircase: nonpositive parameter");
  if (!(notch_half_width < resolution)) throw std::invalid_argument("notched_staircase: notch must be narrower than the resolution");

  const double ds = seg_b.s - seg_a.s;
  const double db = seg_b.b - seg_a.b;
  const bool unit_slope = ds == db;
  auto height_at = [&](double x) {
    if (unit_slope) return seg_a.b + (x - seg_a.s);  // exact for dyadic inputs
    return seg_a.b + (x - seg_a.s) * (db / ds);
  };

  // validate samples: exactly on the segment
  Rational rds = rational_from_double(ds), rdb = rational_from_double(db);
  for (const auto& p : samples) {
    if (p.s < seg_a.s || p.s > seg_b.s) throw std::invalid_argument("notched_staircase: sample outside the segment span");
    Rational lhs = (rational_from_double(p.s) - rational_from_double(seg_a.s)) * rdb;
    Rational rhs = (rational_from_double(p.b) - rational_from_double(seg_a.b)) * rds;
    if (lhs != rhs) throw std::invalid_argument("notched_staircase: sample not on the segment");
    if (p.b + notch_half_width > 1.0 && p.s - notch_half_width <= 0.0)
      throw std::invalid_argument("notched_staircase: sample cannot be notched");
  }

  // events: (position, level) meaning Q(x) >= level for x > position
  struct Event {
    double x;
    double level;
  };
  std::vector<Event> events;
  double x_end = seg_b.s;
  for (int k = 1;; ++k) {
    double xk = seg_a.s + static_cast<double>(k) * resolution;
    if (xk >= seg_b.s) break;
    events.push_back({xk, height_at(xk)});
  }
  for (const auto& p : samples) {
    double lvl = p.b + notch_half_width;
    if (lvl > 1.0) {
      // the notch step would leave the square; end the staircase just before
      x_end = std::min(x_end, p.s - notch_half_width);
      continue;
    }
    events.push_back({p.s - notch_half_width, lvl});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.level < b.level;
  });

  if (x_end <= 0.0) throw std::invalid_argument("notched_staircase: degenerate construction");

  double level = seg_a.b;
  for (const auto& e : events)
    if (e.x <= 0.0) level = std::max(level, e.level);
  level = std::min(level, 1.0);
  if (level == 1.0) return Mechanism::from_vertices({{0.0, 1.0}, {x_end, 1.0}});

  std::vector<Valuation> verts;
  verts.push_back({0.0, level});
  for (const auto& e : events) {
    if (e.x <= 0.0 || e.x >= x_end) continue;
    double lvl = std::min(e.level, 1.0);
    if (lvl <= level) continue;
    verts.push_back({e.x, level});
    verts.push_back({e.x, lvl});
    level = lvl;
    if (level == 1.0) return Mechanism::from_vertices(std::move(verts));
  }
  verts.push_back({x_end, level});
  verts.push_back({x_end, 1.0});
  return Mechanism::from_vertices(std::move(verts));
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json mechanism_to_json(const Mechanism& m) {
  nlohmann::json verts = nlohmann::json::array();
  for (const auto& v : m.vertices()) verts.push_back({exact_decimal(v.s), exact_decimal(v.b)});
  return nlohmann::json{{"vertices", verts}};
}

inline Mechanism mechanism_from_json(const nlohmann::json& j) {
  if (!j.contains("vertices") || !j["vertices"].is_array()) throw std::invalid_argument("mechanism JSON: missing vertices array");
  std::vector<Valuation> vs;
  for (const auto& e : j["vertices"]) {
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("mechanism JSON: vertex must be a [s, b] pair");
    vs.push_back({parse_exact_decimal(e[0].get<std::string>()), parse_exact_decimal(e[1].get<std::string>())});
  }
  if (vs.empty()) return Mechanism::empty();
  return Mechanism::from_vertices(std::move(vs));
}

}  // namespace bitrade
