#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitrade/environment.hpp"
#include "bitrade/grid.hpp"
#include "bitrade/mechanism.hpp"
#include "bitrade/numeric.hpp"
#include "bitrade/simplify.hpp"

namespace bitrade {

enum class LogFlavor { Natural, Base2 };

struct LearnerConfig {
  long long horizon = 0;  // T
  double schedule_c = 200.0;
  LogFlavor log_flavor = LogFlavor::Natural;
  int eps_floor_h = 20;    // smallest grid 2^-20
  int eps_ceiling_h = 1;   // coarsest grid 2^-1
  TieBreak tie_break = TieBreak::PreferUp;
  std::uint64_t seed = 0;
  int stride = 1;          // recompute the empirical optimum every `stride` rounds
  Mechanism initial;       // posted in round 1; EMPTY by default

  std::string canonical_string() const {
    std::ostringstream os;
    os << "T=" << horizon << ";c=" << schedule_c << ";log=" << (log_flavor == LogFlavor::Natural ? "ln" : "log2")
       << ";floor=" << eps_floor_h << ";ceil=" << eps_ceiling_h
       << ";tie=" << (tie_break == TieBreak::PreferUp ? "up" : "right") << ";seed=" << seed << ";stride=" << stride
       << ";init=" << mechanism_to_json(initial).dump();
    return os.str();
  }
  std::uint64_t config_hash() const { return fnv1a(canonical_string()); }
};

// Precision schedule: c * sqrt(log^3 T / (t-1)), clamped to the configured
// dyadic band and rounded down to a power of two.
inline DyadicPrecision precision_schedule(long long t, const LearnerConfig& cfg) {
  if (t < 2) throw std::invalid_argument("precision_schedule: defined for rounds t >= 2");
  if (cfg.horizon < 2) throw std::invalid_argument("precision_schedule: horizon must be >= 2");
  if (cfg.eps_floor_h < cfg.eps_ceiling_h) throw std::invalid_argument("precision_schedule: floor above ceiling");
  double lg = cfg.log_flavor == LogFlavor::Natural ? std::log(static_cast<double>(cfg.horizon))
                                                   : std::log2(static_cast<double>(cfg.horizon));
  double raw = cfg.schedule_c * std::sqrt(lg * lg * lg / static_cast<double>(t - 1));
  double eps = std::clamp(raw, std::ldexp(1.0, -cfg.eps_floor_h), std::ldexp(1.0, -cfg.eps_ceiling_h));
  int h = -std::ilogb(eps);  // largest power of two <= eps
  h = std::clamp(h, cfg.eps_ceiling_h, cfg.eps_floor_h);
  return {h};
}

struct LearnerState {
  long long t = 1;  // round about to be played
  std::vector<Valuation> history;
  std::map<Valuation, long long, ValuationLess> weighted_history;
  Mechanism last_posted;
  Mechanism cached_optimum;
  bool has_cache = false;
  // staleness of the cached optimum measured at each recomputation: fresh
  // optimum value minus the stale mechanism's value on the current history
  double stride_dev_max = 0.0;
  double stride_dev_sum = 0.0;
  long long stride_dev_count = 0;

  std::vector<std::pair<Valuation, long long>> weighted() const {
    return {weighted_history.begin(), weighted_history.end()};
  }
};

// One round of the online algorithm: recompute the empirical optimum on the
// observed history (per stride), simplify it at the scheduled precision, and
// post it.  Round 1 posts the configured initial mechanism.
inline Mechanism learner_step(LearnerState& state, const LearnerConfig& cfg) {
  if (state.t == 1) {
    state.last_posted = cfg.initial;
    return state.last_posted;
  }
  if (!state.has_cache || (state.t - 2) % cfg.stride == 0) {
    auto weighted = state.weighted();
    OptimizerResult fresh = empirical_optimum_weighted(weighted, /*restrict_to_upper_triangle=*/true, cfg.tie_break);
    if (state.has_cache) {
      double dev = fresh.value - total_profit_weighted(state.cached_optimum, weighted);
      state.stride_dev_max = std::max(state.stride_dev_max, dev);
      state.stride_dev_sum += dev;
      ++state.stride_dev_count;
    }
    state.cached_optimum = std::move(fresh.mechanism);
    state.has_cache = true;
  }
  state.last_posted = simplify(state.cached_optimum, precision_schedule(state.t, cfg));
  return state.last_posted;
}

inline void learner_observe(LearnerState& state, const Valuation& v) {
  state.history.push_back(v);
  ++state.weighted_history[v];
  ++state.t;
}

// Best cumulative profit of any single mechanism on the realized sequence.
inline double hindsight_benchmark(const std::vector<Valuation>& valuations) {
  if (valuations.empty()) return 0.0;
  return empirical_optimum_full(valuations, /*restrict_to_upper_triangle=*/true).value;
}

struct RoundRecord {
  long long t = 0;
  int eps_h = 0;  // 2^-h precision used this round; 0 means "not simplified" (round 1)
  double profit = 0.0;
  double cum_profit = 0.0;
  int mech_id = 0;
};

struct RunResult {
  std::string problem = "bilateral";
  long long horizon = 0;
  std::uint64_t env_seed = 0;
  std::uint64_t config_hash = 0;
  double schedule_c = 0.0;
  std::string log_flavor;
  int stride = 1;
  std::vector<RoundRecord> rounds;
  std::vector<Mechanism> mechanisms;  // deduplicated posted mechanisms
  std::vector<Valuation> valuations;  // realized sequence
  double cum_profit = 0.0;
  double benchmark = 0.0;
  double regret = 0.0;
  // staleness of the cached optimum at recompute rounds (nonzero only with
  // stride > 1 or drifting data)
  double stride_deviation_max = 0.0;
  double stride_deviation_mean = 0.0;
};

namespace detail {

struct MechKeyLess {
  bool operator()(const std::vector<Valuation>& a, const std::vector<Valuation>& b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), ValuationLess{});
  }
};

class MechDeduper {
 public:
  int id_of(const Mechanism& m, std::vector<Mechanism>& store) {
    auto [it, inserted] = ids_.try_emplace(m.vertices(), static_cast<int>(store.size()));
    if (inserted) store.push_back(m);
    return it->second;
  }

 private:
  std::map<std::vector<Valuation>, int, MechKeyLess> ids_;
};

}  // namespace detail

// Full online run against an environment; deterministic given (env, cfg).
inline RunResult run(Environment env, const LearnerConfig& cfg) {
  if (cfg.horizon < 1) throw std::invalid_argument("run: horizon must be positive");
  if (cfg.stride < 1) throw std::invalid_argument("run: stride must be positive");
  RunResult rr;
  rr.horizon = cfg.horizon;
  rr.env_seed = env.seed();
  rr.config_hash = cfg.config_hash();
  rr.schedule_c = cfg.schedule_c;
  rr.log_flavor = cfg.log_flavor == LogFlavor::Natural ? "natural" : "base2";
  rr.stride = cfg.stride;

  LearnerState state;
  detail::MechDeduper dedupe;
  double cum = 0.0;  // running sum; exact for dyadic-valued environments
  for (long long t = 1; t <= cfg.horizon; ++t) {
    Mechanism posted = learner_step(state, cfg);
    Valuation v = env.sample(t);
    double p = posted.profit(v);
    cum += p;
    rr.valuations.push_back(v);
    RoundRecord rec;
    rec.t = t;
    rec.eps_h = t == 1 ? 0 : precision_schedule(t, cfg).h;
    rec.profit = p;
    rec.cum_profit = cum;
    rec.mech_id = dedupe.id_of(posted, rr.mechanisms);
    rr.rounds.push_back(rec);
    learner_observe(state, v);
  }
  rr.cum_profit = rr.rounds.empty() ? 0.0 : rr.rounds.back().cum_profit;
  rr.benchmark = hindsight_benchmark(rr.valuations);
  rr.regret = rr.benchmark - rr.cum_profit;
  rr.stride_deviation_max = state.stride_dev_max;
  rr.stride_deviation_mean =
      state.stride_dev_count > 0 ? state.stride_dev_sum / static_cast<double>(state.stride_dev_count) : 0.0;
  return rr;
}

// --- serialization ----------------------------------------------------------

inline std::string double_shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline nlohmann::json runresult_to_json(const RunResult& rr) {
  nlohmann::json j;
  j["problem"] = rr.problem;
  j["horizon"] = rr.horizon;
  j["env_seed"] = rr.env_seed;
  j["config_hash"] = hex64(rr.config_hash);
  j["schedule_c"] = rr.schedule_c;
  j["log_flavor"] = rr.log_flavor;
  j["stride"] = rr.stride;
  j["cum_profit"] = double_shortest(rr.cum_profit);
  j["benchmark"] = double_shortest(rr.benchmark);
  j["regret"] = double_shortest(rr.regret);
  j["stride_deviation_max"] = double_shortest(rr.stride_deviation_max);
  j["stride_deviation_mean"] = double_shortest(rr.stride_deviation_mean);
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : rr.rounds)
    rounds.push_back({{"t", r.t},
                      {"eps_h", r.eps_h},
                      {"profit", double_shortest(r.profit)},
                      {"cum_profit", double_shortest(r.cum_profit)},
                      {"mech_id", r.mech_id}});
  j["rounds"] = rounds;
  nlohmann::json mechs = nlohmann::json::array();
  for (const auto& m : rr.mechanisms) mechs.push_back(mechanism_to_json(m));
  j["mechanisms"] = mechs;
  nlohmann::json vals = nlohmann::json::array();
  for (const auto& v : rr.valuations) vals.push_back({exact_decimal(v.s), exact_decimal(v.b)});
  j["valuations"] = vals;
  return j;
}

inline std::string runresult_to_csv(const RunResult& rr) {
  std::string out = "t,eps_t,profit_t,cum_profit,posted_mech_id\n";
  for (const auto& r : rr.rounds) {
    out += std::to_string(r.t) + "," + exact_decimal(std::ldexp(1.0, -r.eps_h)) + "," + double_shortest(r.profit) +
           "," + double_shortest(r.cum_profit) + "," + std::to_string(r.mech_id) + "\n";
  }
  return out;
}

}  // namespace bitrade
