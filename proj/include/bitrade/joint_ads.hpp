#pragma once

#include <algorithm>
#include <vector>

#include "bitrade/grid.hpp"
#include "bitrade/learner.hpp"
#include "bitrade/mechanism.hpp"
#include "bitrade/simplify.hpp"

namespace bitrade {

// Joint ads: two symmetric buyers, one non-excludable outcome.  North-east
// monotone allocation regions map onto the bilateral staircase machinery by
// reflecting the first coordinate, v1 -> 1 - v1; under that map NE domination
// becomes the bilateral one and the bottom-left simplification direction
// becomes the usual south-east corner rule.
inline Valuation reflect_ne(const Valuation& v) { return {1.0 - v.s, v.b}; }

struct RevenueRecord {
  double p1 = 0.0;
  double p2 = 0.0;
  double rev = 0.0;
};

class NEMechanism {
 public:
  NEMechanism() = default;
  static NEMechanism empty() { return NEMechanism(); }
  static NEMechanism from_reflected(Mechanism m) {
    NEMechanism n;
    n.reflected_ = std::move(m);
    return n;
  }
  // Build from the descending NE staircase: from the top edge (x0, 1) moving
  // right and down to the right edge (1, y_end).
  static NEMechanism from_ne_boundary(std::vector<Valuation> descending) {
    std::vector<Valuation> refl;
    refl.reserve(descending.size());
    for (auto it = descending.rbegin(); it != descending.rend(); ++it) refl.push_back(reflect_ne(*it));
    NEMechanism n;
    n.reflected_ = Mechanism::from_vertices(std::move(refl));
    return n;
  }

  bool is_empty() const { return reflected_.is_empty(); }
  const Mechanism& reflected() const { return reflected_; }

  std::vector<Valuation> ne_boundary() const {
    std::vector<Valuation> out;
    const auto& vs = reflected_.vertices();
    for (auto it = vs.rbegin(); it != vs.rend(); ++it) out.push_back(reflect_ne(*it));
    return out;
  }

  bool contains(const Valuation& v) const { return reflected_.contains(reflect_ne(v)); }

  // Threshold payments: each winner pays the lowest bid that still wins given
  // the other bid; revenue is their sum, in [0, 2].
  RevenueRecord revenue_record(const Valuation& v) const {
    Valuation rv = reflect_ne(v);
    if (!reflected_.contains(rv)) return {};
    double p1 = 1.0 - reflected_.max_seller_at(rv.b);
    double p2 = reflected_.min_buyer_at(rv.s);
    return {p1, p2, p1 + p2};
  }

  double revenue(const Valuation& v) const { return revenue_record(v).rev; }

  bool operator==(const NEMechanism&) const = default;

 private:
  Mechanism reflected_;
};

inline double revenue(const NEMechanism& m, const Valuation& v) { return m.revenue(v); }

inline double total_revenue(const NEMechanism& m, const std::vector<Valuation>& points) {
  std::vector<double> vals;
  vals.reserve(points.size());
  for (const auto& p : points) vals.push_back(m.revenue(p));
  return pairwise_sum(vals);
}

// Mirrored edge-weight decomposition of the total revenue; exact.
inline double total_revenue_decomposed(const NEMechanism& m, const std::vector<Valuation>& points) {
  std::vector<Valuation> refl;
  refl.reserve(points.size());
  for (const auto& p : points) refl.push_back(reflect_ne(p));
  return total_profit_decomposed(m.reflected(), refl, /*trade_bonus=*/1.0);
}

struct NEOptimizerResult {
  NEMechanism mechanism;
  double value = 0.0;
};

// Exact revenue maximizer: longest path on the reflected point grid where
// every allocated point additionally contributes the two threshold payments'
// base unit.
inline NEOptimizerResult empirical_optimum_ne_full(const std::vector<Valuation>& points,
                                                   TieBreak tie_break = TieBreak::PreferUp) {
  if (points.empty()) return {NEMechanism::empty(), 0.0};
  std::vector<Valuation> refl;
  refl.reserve(points.size());
  for (const auto& p : points) refl.push_back(reflect_ne(p));
  OptimizerResult r = empirical_optimum_full(refl, /*restrict_to_upper_triangle=*/false, tie_break, /*trade_bonus=*/1.0);
  return {NEMechanism::from_reflected(std::move(r.mechanism)), r.value};
}

inline NEMechanism empirical_optimum_ne(const std::vector<Valuation>& points, TieBreak tie_break = TieBreak::PreferUp) {
  return empirical_optimum_ne_full(points, tie_break).mechanism;
}

// Simplification approaches NE mechanisms from the bottom-left, i.e. the
// reflected mechanism is simplified with the usual rule; the region grows and
// each threshold payment drops by at most 2 eps.
inline NEMechanism simplify_ne(const NEMechanism& m, DyadicPrecision prec) {
  if (m.is_empty()) throw std::invalid_argument("simplify_ne: EMPTY mechanism");
  return NEMechanism::from_reflected(simplify(m.reflected(), prec));
}

inline double hindsight_benchmark_ne(const std::vector<Valuation>& valuations) {
  if (valuations.empty()) return 0.0;
  return empirical_optimum_ne_full(valuations).value;
}

// Augment-the-Best-Mechanism: the same online loop with revenue in place of
// profit and no upper-triangle restriction.
inline RunResult run_augment(Environment env, const LearnerConfig& cfg) {
  if (cfg.horizon < 1) throw std::invalid_argument("run_augment: horizon must be positive");
  if (cfg.stride < 1) throw std::invalid_argument("run_augment: stride must be positive");
  RunResult rr;
  rr.problem = "joint-ads";
  rr.horizon = cfg.horizon;
  rr.env_seed = env.seed();
  rr.config_hash = cfg.config_hash();
  rr.schedule_c = cfg.schedule_c;
  rr.log_flavor = cfg.log_flavor == LogFlavor::Natural ? "natural" : "base2";
  rr.stride = cfg.stride;

  std::map<Valuation, long long, ValuationLess> history_refl;
  NEMechanism posted;  // EMPTY first round
  NEMechanism cached;
  bool has_cache = false;
  detail::MechDeduper dedupe;
  double cum = 0.0;
  for (long long t = 1; t <= cfg.horizon; ++t) {
    if (t >= 2) {
      if (!has_cache || (t - 2) % cfg.stride == 0) {
        std::vector<std::pair<Valuation, long long>> weighted(history_refl.begin(), history_refl.end());
        OptimizerResult r = empirical_optimum_weighted(weighted, false, cfg.tie_break, 1.0);
        cached = NEMechanism::from_reflected(std::move(r.mechanism));
        has_cache = true;
      }
      posted = simplify_ne(cached, precision_schedule(t, cfg));
    }
    Valuation v = env.sample(t);
    double rev = posted.revenue(v);
    cum += rev;
    rr.valuations.push_back(v);
    RoundRecord rec;
    rec.t = t;
    rec.eps_h = t == 1 ? 0 : precision_schedule(t, cfg).h;
    rec.profit = rev;
    rec.cum_profit = cum;
    rec.mech_id = dedupe.id_of(posted.reflected(), rr.mechanisms);
    rr.rounds.push_back(rec);
    ++history_refl[reflect_ne(v)];
  }
  rr.cum_profit = rr.rounds.empty() ? 0.0 : rr.rounds.back().cum_profit;
  rr.benchmark = hindsight_benchmark_ne(rr.valuations);
  rr.regret = rr.benchmark - rr.cum_profit;
  return rr;
}

}  // namespace bitrade
