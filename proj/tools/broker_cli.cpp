// Experiment runner and inspection CLI for the bilateral-trade broker library.
//
// Subcommands:
//   run      --spec FILE [--jobs N] [--out DIR]   sweep over horizons x seeds
//   bench    --points FILE                        hindsight optimum of a CSV multiset
//   inspect  --mech FILE --query s,b | --batch F  query a serialized mechanism
//
// Exit codes: 0 ok, 1 validation error, 2 runtime failure.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bitrade/environment.hpp"
#include "bitrade/grid.hpp"
#include "bitrade/harness.hpp"
#include "bitrade/learner.hpp"
#include "bitrade/mechanism.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::vector<bitrade::Valuation> read_points_csv(const std::string& text) {
  std::vector<bitrade::Valuation> pts;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("t,", 0) == 0 || line.rfind("s,", 0) == 0) continue;  // header
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() == 2)
      pts.push_back({bitrade::parse_exact_decimal(cells[0]), bitrade::parse_exact_decimal(cells[1])});
    else if (cells.size() == 3)
      pts.push_back({bitrade::parse_exact_decimal(cells[1]), bitrade::parse_exact_decimal(cells[2])});
    else
      throw std::invalid_argument("points CSV: expected 's,b' or 't,s,b' rows");
  }
  return pts;
}

void render_ascii(const bitrade::Mechanism& m, std::ostream& os) {
  constexpr int N = 64;
  for (int r = 0; r < N; ++r) {
    double b = (static_cast<double>(N - r) - 0.5) / N;
    std::string row;
    for (int c = 0; c < N; ++c) {
      double s = (static_cast<double>(c) + 0.5) / N;
      row.push_back(m.contains({s, b}) ? '#' : '.');
    }
    os << row << "\n";
  }
}

void answer_query(const bitrade::Mechanism& m, const bitrade::Valuation& v, std::ostream& os) {
  // console output uses the shortest round-trip form; file formats stay exact
  auto pq = m.payments(v);
  if (!pq) {
    os << bitrade::double_shortest(v.s) << "," << bitrade::double_shortest(v.b) << ": no trade\n";
    return;
  }
  os << bitrade::double_shortest(v.s) << "," << bitrade::double_shortest(v.b) << ": trade p=" << bitrade::double_shortest(pq->p)
     << " q=" << bitrade::double_shortest(pq->q) << " profit=" << bitrade::double_shortest(pq->q - pq->p) << "\n";
}

bitrade::Valuation parse_query(const std::string& q) {
  auto comma = q.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("query must be 's,b'");
  return {bitrade::parse_exact_decimal(q.substr(0, comma)), bitrade::parse_exact_decimal(q.substr(comma + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bilateral trade profit-maximization experiments"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, points_path, mech_path, query, batch_path;
  int jobs = 0;
  bool render = false;

  const char* env_out = std::getenv("BROKER_OUT_DIR");

  auto* run_cmd = app.add_subcommand("run", "run an experiment spec");
  run_cmd->add_option("--spec", spec_path, "experiment spec JSON")->required();
  run_cmd->add_option("--jobs", jobs, "worker threads (default: cores)");
  run_cmd->add_option("--out", out_dir, "output directory");

  auto* bench_cmd = app.add_subcommand("bench", "hindsight optimum for a CSV of valuations");
  bench_cmd->add_option("--points", points_path, "CSV file with s,b or t,s,b rows")->required();

  auto* inspect_cmd = app.add_subcommand("inspect", "query a serialized mechanism");
  inspect_cmd->add_option("--mech", mech_path, "mechanism JSON file")->required();
  inspect_cmd->add_option("--query", query, "single valuation 's,b'");
  inspect_cmd->add_option("--batch", batch_path, "CSV of valuations to query");
  inspect_cmd->add_flag("--render", render, "ASCII render of the allocation region (64x64)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) {
      bitrade::ExperimentSpec spec;
      try {
        spec = bitrade::ExperimentSpec::from_json(nlohmann::json::parse(slurp(spec_path)));
      } catch (const std::exception& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return 1;
      }
      std::string out = !out_dir.empty() ? out_dir : (env_out ? std::string(env_out) : spec.out_dir);
      bitrade::SweepSummary s = bitrade::run_experiment(spec, jobs, out);
      for (const auto& h : s.per_horizon)
        std::cout << "T=" << h.horizon << " mean_regret=" << h.mean_regret << " stddev=" << h.stddev_regret
                  << " runs=" << h.runs << "\n";
      if (s.slope)
        std::cout << "loglog slope=" << s.slope->slope << " ci=[" << s.slope->ci_lo << "," << s.slope->ci_hi << "]\n";
      std::cout << "artifacts written to " << out << "\n";
      return 0;
    }
    if (bench_cmd->parsed()) {
      std::vector<bitrade::Valuation> pts;
      try {
        pts = read_points_csv(slurp(points_path));
      } catch (const std::exception& e) {
        std::cerr << "points error: " << e.what() << "\n";
        return 1;
      }
      auto t0 = std::chrono::steady_clock::now();
      if (pts.empty()) {
        std::cout << "value=0\n" << bitrade::mechanism_to_json(bitrade::Mechanism::empty()).dump() << "\n";
        return 0;
      }
      bitrade::OptimizerResult r = bitrade::empirical_optimum_full(pts, /*restrict_to_upper_triangle=*/true);
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
      std::cout << "value=" << bitrade::double_shortest(r.value) << "\n";
      std::cout << bitrade::mechanism_to_json(r.mechanism).dump() << "\n";
      std::cout << "wall_ms=" << ms << "\n";
      return 0;
    }
    if (inspect_cmd->parsed()) {
      bitrade::Mechanism m;
      try {
        m = bitrade::mechanism_from_json(nlohmann::json::parse(slurp(mech_path)));
      } catch (const std::exception& e) {
        std::cerr << "mechanism error: " << e.what() << "\n";
        return 1;
      }
      if (query.empty() && batch_path.empty() && !render) {
        std::cerr << "inspect: provide --query, --batch, or --render\n";
        return 1;
      }
      if (!query.empty()) answer_query(m, parse_query(query), std::cout);
      if (!batch_path.empty())
        for (const auto& v : read_points_csv(slurp(batch_path))) answer_query(m, v, std::cout);
      if (render) render_ascii(m, std::cout);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
