#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bitrade/environment.hpp"
#include "bitrade/joint_ads.hpp"
#include "bitrade/learner.hpp"
#include "bitrade/numeric.hpp"

namespace bitrade {

// Declarative experiment: one environment, a grid of horizons, a batch of
// seeds, shared learner settings.
struct ExperimentSpec {
  std::string problem = "bilateral";  // or "joint-ads"
  nlohmann::json environment;
  std::vector<long long> horizons;
  std::vector<std::uint64_t> explicit_seeds;  // empty when derived
  int seed_count = 0;
  std::uint64_t master_seed = 0;
  bool derive_seeds = false;
  double schedule_c = 1.0;
  LogFlavor log_flavor = LogFlavor::Natural;
  int eps_floor_h = 20;
  int eps_ceiling_h = 1;
  TieBreak tie_break = TieBreak::PreferUp;
  int stride = 1;
  std::string out_dir = "out";

  int runs_per_horizon() const { return derive_seeds ? seed_count : static_cast<int>(explicit_seeds.size()); }

  std::uint64_t seed_for(long long horizon, int index) const {
    if (derive_seeds) return derive_seed(master_seed, static_cast<std::uint64_t>(horizon), static_cast<std::uint64_t>(index));
    return explicit_seeds[static_cast<size_t>(index)];
  }

  static ExperimentSpec from_json(const nlohmann::json& j) {
    ExperimentSpec s;
    s.problem = j.value("problem", std::string("bilateral"));
    if (s.problem != "bilateral" && s.problem != "joint-ads") throw std::invalid_argument("spec: unknown problem '" + s.problem + "'");
    if (!j.contains("environment")) throw std::invalid_argument("spec: missing environment");
    s.environment = j.at("environment");
    if (!j.contains("horizons") || !j.at("horizons").is_array() || j.at("horizons").empty())
      throw std::invalid_argument("spec: at least one horizon required");
    for (const auto& h : j.at("horizons")) {
      long long t = h.get<long long>();
      if (t < 2) throw std::invalid_argument("spec: horizons must be >= 2");
      s.horizons.push_back(t);
    }
    if (!j.contains("seeds")) throw std::invalid_argument("spec: missing seeds");
    const auto& seeds = j.at("seeds");
    if (seeds.is_array()) {
      for (const auto& e : seeds) s.explicit_seeds.push_back(e.get<std::uint64_t>());
      if (s.explicit_seeds.empty()) throw std::invalid_argument("spec: at least one seed required");
    } else {
      s.derive_seeds = true;
      s.seed_count = seeds.at("count").get<int>();
      s.master_seed = seeds.value("master", 0ULL);
      if (s.seed_count < 1) throw std::invalid_argument("spec: seed count must be positive");
    }
    if (j.contains("learner")) {
      const auto& l = j.at("learner");
      s.schedule_c = l.value("c", 1.0);
      std::string lf = l.value("log", std::string("natural"));
      if (lf == "natural")
        s.log_flavor = LogFlavor::Natural;
      else if (lf == "base2")
        s.log_flavor = LogFlavor::Base2;
      else
        throw std::invalid_argument("spec: unknown log flavor '" + lf + "'");
      s.eps_floor_h = l.value("eps_floor_h", 20);
      s.eps_ceiling_h = l.value("eps_ceiling_h", 1);
      std::string tie = l.value("tie_break", std::string("up"));
      if (tie == "up")
        s.tie_break = TieBreak::PreferUp;
      else if (tie == "right")
        s.tie_break = TieBreak::PreferRight;
      else
        throw std::invalid_argument("spec: unknown tie break '" + tie + "'");
      s.stride = l.value("stride", 1);
      if (s.stride < 1) throw std::invalid_argument("spec: stride must be positive");
    }
    s.out_dir = j.value("out_dir", std::string("out"));
    return s;
  }
};

struct SweepRow {
  std::string problem;
  long long horizon = 0;
  std::uint64_t seed = 0;
  double regret = 0.0;
  double benchmark = 0.0;
  double cum_profit = 0.0;
  long long wall_ms = 0;
};

struct HorizonStats {
  long long horizon = 0;
  double mean_regret = 0.0;
  double stddev_regret = 0.0;
  int runs = 0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int n = 0;
};

// Least squares on (ln T, ln mean-regret); the 95% band uses the normal
// multiplier.
inline std::optional<SlopeFit> fit_loglog(const std::vector<HorizonStats>& stats) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : stats)
    if (s.mean_regret > 0.0) pts.push_back({std::log(static_cast<double>(s.horizon)), std::log(s.mean_regret)});
  if (pts.size() < 3) return std::nullopt;
  double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double denom = n * sxx - sx * sx;
  SlopeFit f;
  f.n = static_cast<int>(pts.size());
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double sse = 0;
  for (auto [x, y] : pts) {
    double r = y - (f.intercept + f.slope * x);
    sse += r * r;
  }
  double dof = n > 2 ? n - 2 : 1;
  f.stderr_slope = std::sqrt(sse / dof / (sxx - sx * sx / n));
  f.ci_lo = f.slope - 1.96 * f.stderr_slope;
  f.ci_hi = f.slope + 1.96 * f.stderr_slope;
  return f;
}

struct SweepSummary {
  std::vector<SweepRow> rows;  // ordered by (horizon, seed index)
  std::vector<HorizonStats> per_horizon;
  std::optional<SlopeFit> slope;
};

inline RunResult run_one(const ExperimentSpec& spec, long long horizon, std::uint64_t env_seed) {
  Environment env = Environment::from_json(spec.environment, env_seed);
  LearnerConfig cfg;
  cfg.horizon = horizon;
  cfg.schedule_c = spec.schedule_c;
  cfg.log_flavor = spec.log_flavor;
  cfg.eps_floor_h = spec.eps_floor_h;
  cfg.eps_ceiling_h = spec.eps_ceiling_h;
  cfg.tie_break = spec.tie_break;
  cfg.seed = env_seed;
  cfg.stride = spec.stride;
  return spec.problem == "joint-ads" ? run_augment(std::move(env), cfg) : run(std::move(env), cfg);
}

// Runs the whole sweep with a worker pool; results land in (horizon, seed)
// order no matter which worker finishes first.
inline SweepSummary run_sweep(const ExperimentSpec& spec, int jobs,
                              const std::function<void(const RunResult&, long long, std::uint64_t)>& on_result = {}) {
  const int per = spec.runs_per_horizon();
  struct Task {
    long long horizon;
    int index;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (long long T : spec.horizons)
    for (int k = 0; k < per; ++k) tasks.push_back({T, k, spec.seed_for(T, k)});

  std::vector<SweepRow> rows(tasks.size());
  std::vector<RunResult> results(tasks.size());
  std::atomic<size_t> next{0};
  std::mutex result_mu;
  int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));
  auto work = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      auto t0 = std::chrono::steady_clock::now();
      RunResult rr = run_one(spec, tasks[i].horizon, tasks[i].seed);
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
      SweepRow row{spec.problem, tasks[i].horizon, tasks[i].seed, rr.regret, rr.benchmark, rr.cum_profit, ms};
      std::lock_guard<std::mutex> lock(result_mu);
      rows[i] = row;
      results[i] = std::move(rr);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();

  if (on_result)
    for (size_t i = 0; i < tasks.size(); ++i) on_result(results[i], tasks[i].horizon, tasks[i].seed);

  SweepSummary summary;
  summary.rows = std::move(rows);
  for (long long T : spec.horizons) {
    HorizonStats hs;
    hs.horizon = T;
    std::vector<double> regrets;
    for (const auto& r : summary.rows)
      if (r.horizon == T) regrets.push_back(r.regret);
    hs.runs = static_cast<int>(regrets.size());
    double mean = 0;
    for (double r : regrets) mean += r;
    mean /= static_cast<double>(regrets.size());
    double var = 0;
    for (double r : regrets) var += (r - mean) * (r - mean);
    hs.mean_regret = mean;
    hs.stddev_regret = regrets.size() > 1 ? std::sqrt(var / static_cast<double>(regrets.size() - 1)) : 0.0;
    summary.per_horizon.push_back(hs);
  }
  summary.slope = fit_loglog(summary.per_horizon);
  return summary;
}

inline nlohmann::json summary_to_json(const ExperimentSpec& spec, const SweepSummary& s) {
  nlohmann::json j;
  j["problem"] = spec.problem;
  nlohmann::json ph = nlohmann::json::array();
  for (const auto& h : s.per_horizon)
    ph.push_back({{"T", h.horizon},
                  {"mean_regret", double_shortest(h.mean_regret)},
                  {"stddev_regret", double_shortest(h.stddev_regret)},
                  {"runs", h.runs}});
  j["per_horizon"] = ph;
  if (s.slope) {
    j["slope_fit"] = {{"slope", double_shortest(s.slope->slope)},
                      {"intercept", double_shortest(s.slope->intercept)},
                      {"stderr", double_shortest(s.slope->stderr_slope)},
                      {"ci_lo", double_shortest(s.slope->ci_lo)},
                      {"ci_hi", double_shortest(s.slope->ci_hi)},
                      {"points", s.slope->n}};
  }
  return j;
}

inline std::string aggregate_csv(const SweepSummary& s) {
  std::string out = "problem,T,seed,regret,benchmark,cum_profit,wall_ms\n";
  for (const auto& r : s.rows)
    out += r.problem + "," + std::to_string(r.horizon) + "," + std::to_string(r.seed) + "," + double_shortest(r.regret) +
           "," + double_shortest(r.benchmark) + "," + double_shortest(r.cum_profit) + "," + std::to_string(r.wall_ms) + "\n";
  return out;
}

// Full experiment: per-run JSONs, aggregate CSV, summary JSON, and a sidecar
// timing log (the only artifact carrying timestamps).
inline SweepSummary run_experiment(const ExperimentSpec& spec, int jobs, const std::string& out_override = "") {
  namespace fs = std::filesystem;
  fs::path out = out_override.empty() ? spec.out_dir : out_override;
  fs::create_directories(out);
  std::mutex io_mu;
  std::ofstream log(out / "timings.log", std::ios::app);
  auto on_result = [&](const RunResult& rr, long long T, std::uint64_t seed) {
    std::ostringstream name;
    name << "run_" << spec.problem << "_T" << T << "_s" << seed << ".json";
    std::lock_guard<std::mutex> lock(io_mu);
    std::ofstream f(out / name.str());
    f << runresult_to_json(rr).dump(2) << "\n";
  };
  SweepSummary s = run_sweep(spec, jobs, on_result);
  {
    std::ofstream f(out / "aggregate.csv");
    f << aggregate_csv(s);
  }
  {
    std::ofstream f(out / "summary.json");
    f << summary_to_json(spec, s).dump(2) << "\n";
  }
  auto now = std::chrono::system_clock::now();
  log << "completed " << s.rows.size() << " runs at epoch_ms="
      << std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() << "\n";
  return s;
}

}  // namespace bitrade
