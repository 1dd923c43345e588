#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "bitrade/mechanism.hpp"
#include "bitrade/valuation.hpp"

namespace bitrade {

struct DsicViolation {
  std::string kind;  // "seller-dsic", "buyer-dsic", "seller-ir", "buyer-ir"
  double value = 0.0;
  double bid_s = 0.0;
  double bid_b = 0.0;
  double utility_truth = 0.0;
  double utility_dev = 0.0;
};

struct DsicReport {
  std::vector<DsicViolation> violations;
  long long checks = 0;
  bool clean() const { return violations.empty(); }
};

namespace detail {

// Core checker over explicit trade/payment rules so tests can inject
// corrupted payments.
template <class TradeFn, class PayS, class PayB>
DsicReport verify_rules(const std::vector<double>& values, TradeFn trade, PayS pay_s, PayB pay_b,
                        size_t max_violations) {
  DsicReport rep;
  auto record = [&](const char* kind, double val, double bs, double bb, double ut, double ud) {
    if (rep.violations.size() < max_violations) rep.violations.push_back({kind, val, bs, bb, ut, ud});
  };
  auto useller = [&](double vs, double bs, double bb) { return trade(bs, bb) ? pay_s(bs, bb) : vs; };
  auto ubuyer = [&](double vb, double bs, double bb) { return trade(bs, bb) ? vb - pay_b(bs, bb) : 0.0; };

  for (double vs : values) {
    for (double bb : values) {
      double truth = useller(vs, vs, bb);
      ++rep.checks;
      if (truth < vs) record("seller-ir", vs, vs, bb, truth, vs);
      for (double bs : values) {
        ++rep.checks;
        double dev = useller(vs, bs, bb);
        if (dev > truth) record("seller-dsic", vs, bs, bb, truth, dev);
      }
    }
  }
  for (double vb : values) {
    for (double bs : values) {
      double truth = ubuyer(vb, bs, vb);
      ++rep.checks;
      if (truth < 0.0) record("buyer-ir", vb, bs, vb, truth, 0.0);
      for (double bb : values) {
        ++rep.checks;
        double dev = ubuyer(vb, bs, bb);
        if (dev > truth) record("buyer-dsic", vb, bs, bb, truth, dev);
      }
    }
  }
  return rep;
}

inline std::vector<double> bid_grid(const Mechanism& m, double step) {
  std::vector<double> values;
  for (double x = 0.0; x < 1.0; x += step) values.push_back(x);
  values.push_back(1.0);
  for (const auto& v : m.vertices()) {
    values.push_back(v.s);
    values.push_back(v.b);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

}  // namespace detail

// Checks the dominant-strategy and participation inequalities on the uniform
// bid grid extended by every boundary coordinate.  Mechanisms built from a
// valid staircase with their own payments always come back clean.
inline DsicReport verify_dsic_ir(const Mechanism& m, double bid_grid_step, size_t max_violations = 64) {
  if (!(bid_grid_step > 0.0) || bid_grid_step > 0.25) throw std::invalid_argument("verify_dsic_ir: step must lie in (0, 1/4]");
  auto values = detail::bid_grid(m, bid_grid_step);
  auto trade = [&](double bs, double bb) { return m.contains({bs, bb}); };
  auto pay_s = [&](double bs, double bb) {
    (void)bs;
    return m.max_seller_at(bb);
  };
  auto pay_b = [&](double bs, double bb) {
    (void)bb;
    return m.min_buyer_at(bs);
  };
  return detail::verify_rules(values, trade, pay_s, pay_b, max_violations);
}

// Same check with a constant offset added to the seller payment; a nonzero
// offset breaks incentive compatibility and must be reported.
inline DsicReport verify_dsic_ir_with_seller_offset(const Mechanism& m, double bid_grid_step, double offset,
                                                    size_t max_violations = 64) {
  if (!(bid_grid_step > 0.0) || bid_grid_step > 0.25) throw std::invalid_argument("verify_dsic_ir: step must lie in (0, 1/4]");
  auto values = detail::bid_grid(m, bid_grid_step);
  auto trade = [&](double bs, double bb) { return m.contains({bs, bb}); };
  auto pay_s = [&](double bs, double bb) {
    (void)bs;
    return m.max_seller_at(bb) + offset;
  };
  auto pay_b = [&](double bs, double bb) {
    (void)bb;
    return m.min_buyer_at(bs);
  };
  return detail::verify_rules(values, trade, pay_s, pay_b, max_violations);
}

}  // namespace bitrade
