#pragma once

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitrade/mechanism.hpp"
#include "bitrade/numeric.hpp"
#include "bitrade/valuation.hpp"

namespace bitrade {

enum class EnvKind { FiniteSupport, SegmentUniform, TwoPointBiased, Adversarial3T, Replay };

struct Atom {
  Valuation v;
  Rational w;
};

struct AdvRound {
  int gamma = 0;  // +1 right, -1 left
  double a = 0.0;
  double b = 0.0;
  Valuation emitted;
};

struct AdversarialTrace {
  double delta = 0.0;
  std::vector<AdvRound> rounds;
};

// Valuation-sequence generator.  Each instance owns its RNG stream; sampling
// must proceed in round order t = 1, 2, ...
class Environment {
 public:
  // Shrinkage cap: past this round the adversarial deltas underflow the exact
  // integer range, so the pair (a_t, b_t) freezes at its last values.
  static constexpr int kAdversarialExactRounds = 31;

  static Environment finite_support(std::vector<Atom> atoms, std::uint64_t seed) {
    if (atoms.empty()) throw std::invalid_argument("finite_support: no atoms");
    Rational total(0);
    for (const auto& a : atoms) {
      require_unit_square(a.v);
      if (a.w <= Rational(0)) throw std::invalid_argument("finite_support: nonpositive weight");
      total += a.w;
    }
    if (total != Rational(1)) throw std::invalid_argument("finite_support: weights must sum to 1 exactly");
    Environment e;
    e.kind_ = EnvKind::FiniteSupport;
    e.atoms_ = std::move(atoms);
    e.seed_ = seed;
    e.rng_ = Rng(seed);
    e.prepare_atom_sampler();
    return e;
  }

  static Environment segment_uniform(Valuation a, Valuation b, std::uint64_t seed) {
    require_unit_square(a);
    require_unit_square(b);
    if (!(a.s < b.s) || !(a.b < b.b)) throw std::invalid_argument("segment_uniform: segment must ascend");
    Environment e;
    e.kind_ = EnvKind::SegmentUniform;
    e.seg_a_ = a;
    e.seg_b_ = b;
    e.seed_ = seed;
    e.rng_ = Rng(seed);
    return e;
  }

  // Atoms (0,1) and (1/4,3/4) with probabilities (1 +/- eps)/2.
  static Environment two_point_biased(Rational eps, bool favor_point_mass, std::uint64_t seed) {
    if (eps < Rational(0) || eps >= Rational(1)) throw std::invalid_argument("two_point_biased: eps outside [0,1)");
    Rational up = (Rational(1) + eps) / 2;
    Rational dn = (Rational(1) - eps) / 2;
    std::vector<Atom> atoms{{{0.0, 1.0}, favor_point_mass ? up : dn}, {{0.25, 0.75}, favor_point_mass ? dn : up}};
    Environment e = finite_support(std::move(atoms), seed);
    e.kind_ = EnvKind::TwoPointBiased;
    e.bias_ = eps;
    e.favor_first_ = favor_point_mass;
    return e;
  }

  static Environment adversarial_3t(double delta, std::uint64_t seed) {
    if (!(delta > 0.0) || !(delta < 0.5)) throw std::invalid_argument("adversarial_3t: delta must lie in (0, 1/2)");
    Environment e;
    e.kind_ = EnvKind::Adversarial3T;
    e.trace_.delta = delta;
    e.seed_ = seed;
    e.rng_ = Rng(seed);
    e.adv_m_ = 3;     // closed-form integer state at t = 1
    e.adv_pow3_ = 3;  // 3^t
    return e;
  }

  static Environment replay(std::vector<Valuation> seq) {
    Environment e;
    e.kind_ = EnvKind::Replay;
    e.replay_ = std::move(seq);
    return e;
  }

  EnvKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const AdversarialTrace& trace() const { return trace_; }
  Valuation segment_start() const { return seg_a_; }
  Valuation segment_end() const { return seg_b_; }
  Rational bias() const { return bias_; }
  size_t replay_length() const { return replay_.size(); }

  Valuation sample(long long t) {
    if (t != t_ + 1) throw std::logic_error("Environment::sample: rounds must advance sequentially");
    t_ = t;
    switch (kind_) {
      case EnvKind::FiniteSupport:
      case EnvKind::TwoPointBiased: {
        std::uint64_t draw = rng_.below(atom_den_);
        for (size_t k = 0; k < atom_cum_.size(); ++k)
          if (draw < atom_cum_[k]) return atoms_[k].v;
        return atoms_.back().v;
      }
      case EnvKind::SegmentUniform: {
        // 20 fractional bits keep every derived rational (cuts, payments,
        // products in the exact integrator) inside 64-bit denominators
        double u = rng_.dyadic(20);
        return {seg_a_.s + u * (seg_b_.s - seg_a_.s), seg_a_.b + u * (seg_b_.b - seg_a_.b)};
      }
      case EnvKind::Adversarial3T: {
        int gamma = rng_.coin() ? 1 : -1;
        double a = trace_.delta * static_cast<double>(adv_m_ - 1) / (2.0 * static_cast<double>(adv_pow3_));
        double b = trace_.delta * static_cast<double>(adv_m_ + 1) / (2.0 * static_cast<double>(adv_pow3_));
        Valuation out = gamma > 0 ? Valuation{b, 0.5} : Valuation{a, 1.0};
        trace_.rounds.push_back({gamma, a, b, out});
        if (t < kAdversarialExactRounds) {  // freeze once the shrinkage underflows
          adv_m_ = 3 * adv_m_ + 6 * gamma;
          adv_pow3_ *= 3;
        }
        return out;
      }
      case EnvKind::Replay: {
        if (static_cast<size_t>(t) > replay_.size()) throw std::runtime_error("replay environment exhausted");
        return replay_[static_cast<size_t>(t - 1)];
      }
    }
    throw std::logic_error("unreachable");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    switch (kind_) {
      case EnvKind::FiniteSupport: {
        j["variant"] = "finite_support";
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& a : atoms_)
          arr.push_back({{"s", exact_decimal(a.v.s)},
                         {"b", exact_decimal(a.v.b)},
                         {"num", a.w.numerator()},
                         {"den", a.w.denominator()}});
        j["atoms"] = arr;
        break;
      }
      case EnvKind::SegmentUniform:
        j["variant"] = "segment_uniform";
        j["from"] = {exact_decimal(seg_a_.s), exact_decimal(seg_a_.b)};
        j["to"] = {exact_decimal(seg_b_.s), exact_decimal(seg_b_.b)};
        break;
      case EnvKind::TwoPointBiased:
        j["variant"] = "two_point_biased";
        j["eps_num"] = bias_.numerator();
        j["eps_den"] = bias_.denominator();
        j["favored"] = favor_first_ ? "M1" : "M2";
        break;
      case EnvKind::Adversarial3T:
        j["variant"] = "adversarial_3t";
        j["delta"] = exact_decimal(trace_.delta);
        break;
      case EnvKind::Replay: {
        j["variant"] = "replay";
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : replay_) arr.push_back({exact_decimal(v.s), exact_decimal(v.b)});
        j["sequence"] = arr;
        break;
      }
    }
    return j;
  }

  static Environment from_json(const nlohmann::json& j, std::uint64_t seed) {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "finite_support") {
      std::vector<Atom> atoms;
      for (const auto& a : j.at("atoms"))
        atoms.push_back({{parse_exact_decimal(a.at("s").get<std::string>()), parse_exact_decimal(a.at("b").get<std::string>())},
                         Rational(a.at("num").get<long long>(), a.at("den").get<long long>())});
      return finite_support(std::move(atoms), seed);
    }
    if (variant == "segment_uniform") {
      auto f = j.at("from");
      auto t = j.at("to");
      return segment_uniform({parse_exact_decimal(f[0].get<std::string>()), parse_exact_decimal(f[1].get<std::string>())},
                             {parse_exact_decimal(t[0].get<std::string>()), parse_exact_decimal(t[1].get<std::string>())}, seed);
    }
    if (variant == "two_point_biased") {
      Rational eps(j.at("eps_num").get<long long>(), j.at("eps_den").get<long long>());
      return two_point_biased(eps, j.at("favored").get<std::string>() == "M1", seed);
    }
    if (variant == "adversarial_3t") return adversarial_3t(parse_exact_decimal(j.at("delta").get<std::string>()), seed);
    if (variant == "replay") {
      std::vector<Valuation> seq;
      for (const auto& v : j.at("sequence"))
        seq.push_back({parse_exact_decimal(v[0].get<std::string>()), parse_exact_decimal(v[1].get<std::string>())});
      return replay(std::move(seq));
    }
    throw std::invalid_argument("unknown environment variant: " + variant);
  }

 private:
  void prepare_atom_sampler() {
    long long den = 1;
    for (const auto& a : atoms_) den = std::lcm(den, a.w.denominator());
    atom_den_ = static_cast<std::uint64_t>(den);
    std::uint64_t cum = 0;
    for (const auto& a : atoms_) {
      cum += static_cast<std::uint64_t>(a.w.numerator() * (den / a.w.denominator()));
      atom_cum_.push_back(cum);
    }
  }

  EnvKind kind_ = EnvKind::FiniteSupport;
  std::vector<Atom> atoms_;
  std::uint64_t atom_den_ = 1;
  std::vector<std::uint64_t> atom_cum_;
  Valuation seg_a_, seg_b_;
  Rational bias_{0};
  bool favor_first_ = true;
  std::vector<Valuation> replay_;
  AdversarialTrace trace_;
  long long adv_m_ = 0;
  long long adv_pow3_ = 1;
  std::uint64_t seed_ = 0;
  Rng rng_{0};
  long long t_ = 0;
};

// --- replay CSV -------------------------------------------------------------

inline std::string replay_to_csv(const std::vector<Valuation>& seq) {
  std::string out = "t,s,b\n";
  for (size_t i = 0; i < seq.size(); ++i)
    out += std::to_string(i + 1) + "," + exact_decimal(seq[i].s) + "," + exact_decimal(seq[i].b) + "\n";
  return out;
}

inline std::vector<Valuation> replay_from_csv(const std::string& text) {
  std::vector<Valuation> seq;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("t,", 0) == 0) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw std::invalid_argument("replay CSV: malformed row '" + line + "'");
    seq.push_back({parse_exact_decimal(line.substr(c1 + 1, c2 - c1 - 1)), parse_exact_decimal(line.substr(c2 + 1))});
  }
  return seq;
}

// --- adversarial certificate -------------------------------------------------

struct AdversarialCertificate {
  double tau = 0.0;
  Mechanism m_star;
};

// A threshold separating right-round b values from left-round a values, and
// the hindsight mechanism built on it: allocate [0,tau] x [1/2,1] plus the
// top strip up to delta.
inline AdversarialCertificate adversarial_certificate(const AdversarialTrace& trace) {
  if (trace.rounds.empty()) throw std::invalid_argument("adversarial_certificate: empty trace");
  double max_right_b = -1.0, min_left_a = 2.0;
  for (const auto& r : trace.rounds) {
    if (r.gamma > 0)
      max_right_b = std::max(max_right_b, r.b);
    else
      min_left_a = std::min(min_left_a, r.a);
  }
  double lo = max_right_b >= 0.0 ? max_right_b : 0.0;
  double hi = min_left_a <= 1.0 ? min_left_a : trace.delta;
  if (!(lo < hi)) throw std::logic_error("adversarial_certificate: no separating threshold");
  double tau = (lo + hi) / 2.0;
  Mechanism m = Mechanism::from_vertices({{0.0, 0.5}, {tau, 0.5}, {tau, 1.0}, {trace.delta, 1.0}});
  return {tau, m};
}

// --- exact expectations ------------------------------------------------------

namespace detail {

inline Rational profit_rational(const Mechanism& m, const Rational& ps, const Rational& pb) {
  if (m.is_empty()) return Rational(0);
  const auto& vs = m.vertices();
  bool any = false;
  Rational best_s(0);
  for (const auto& v : vs) {
    if (rational_from_double(v.b) <= pb) {
      best_s = rational_from_double(v.s);
      any = true;
    } else {
      break;  // vertices sorted by b
    }
  }
  if (!any || best_s < ps) return Rational(0);
  for (const auto& v : vs)
    if (rational_from_double(v.s) >= ps) return rational_from_double(v.b) - best_s;
  throw std::logic_error("profit_rational: inconsistent boundary");
}

}  // namespace detail

// Exact expectation of a functional of several mechanisms' profits under a
// finite-support or segment-uniform law.  The segment case integrates the
// piecewise-constant profit by enumerating the parameter values where the
// segment crosses a boundary coordinate of any mechanism.
template <class F>
Rational expected_functional_exact(const Environment& env, const std::vector<const Mechanism*>& mechs, F&& eval) {
  switch (env.kind()) {
    case EnvKind::FiniteSupport:
    case EnvKind::TwoPointBiased: {
      Rational total(0);
      std::vector<Rational> profits(mechs.size());
      for (const auto& atom : env.atoms()) {
        Rational ps = rational_from_double(atom.v.s), pb = rational_from_double(atom.v.b);
        for (size_t k = 0; k < mechs.size(); ++k) profits[k] = detail::profit_rational(*mechs[k], ps, pb);
        total += atom.w * eval(profits);
      }
      return total;
    }
    case EnvKind::SegmentUniform: {
      Rational as = rational_from_double(env.segment_start().s), ab = rational_from_double(env.segment_start().b);
      Rational ds = rational_from_double(env.segment_end().s) - as;
      Rational db = rational_from_double(env.segment_end().b) - ab;
      std::vector<Rational> cuts{Rational(0), Rational(1)};
      for (const Mechanism* m : mechs) {
        if (m->is_empty()) continue;
        for (const auto& v : m->vertices()) {
          Rational us = (rational_from_double(v.s) - as) / ds;
          Rational ub = (rational_from_double(v.b) - ab) / db;
          if (us > Rational(0) && us < Rational(1)) cuts.push_back(us);
          if (ub > Rational(0) && ub < Rational(1)) cuts.push_back(ub);
        }
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      Rational total(0);
      std::vector<Rational> profits(mechs.size());
      for (size_t i = 1; i < cuts.size(); ++i) {
        Rational mid = (cuts[i - 1] + cuts[i]) / 2;
        Rational ps = as + mid * ds, pb = ab + mid * db;
        for (size_t k = 0; k < mechs.size(); ++k) profits[k] = detail::profit_rational(*mechs[k], ps, pb);
        total += (cuts[i] - cuts[i - 1]) * eval(profits);
      }
      return total;
    }
    default:
      throw std::invalid_argument("expected_functional_exact: unsupported environment variant");
  }
}

inline Rational expected_profit_exact(const Mechanism& m, const Environment& env) {
  return expected_functional_exact(env, {&m}, [](const std::vector<Rational>& p) { return p[0]; });
}

}  // namespace bitrade
