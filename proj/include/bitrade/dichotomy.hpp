#pragma once

#include <stdexcept>

#include "bitrade/environment.hpp"
#include "bitrade/numeric.hpp"
#include "bitrade/simplify.hpp"

namespace bitrade {

enum class DichotomyClause { IncrementBounded, ProfitGap, Both };

struct DichotomyWitness {
  Rational gap;            // E[profit(phi_h) - profit(phi_{h+1})]
  Rational second_moment;  // E[(profit(phi_{h+1}) - profit(phi_h))^2]
  bool gap_clause = false;         // gap >= 31 * 2^-h
  bool bounded_clause = false;     // second moment <= 136 * 2^-h
  DichotomyClause clause = DichotomyClause::IncrementBounded;
};

// Evaluates the two local-dichotomy clauses for the approximating sequence at
// level h under an exactly integrable environment.  For mechanisms whose
// allocation region fits the upper triangle at least one clause holds.
inline DichotomyWitness dichotomy_witness(const Mechanism& m, int h, const Environment& env) {
  Mechanism lo = approximate(m, h);
  Mechanism hi = approximate(m, h + 1);
  DichotomyWitness w;
  w.gap = expected_functional_exact(env, {&lo, &hi}, [](const std::vector<Rational>& p) { return p[0] - p[1]; });
  w.second_moment = expected_functional_exact(env, {&lo, &hi}, [](const std::vector<Rational>& p) {
    Rational d = p[1] - p[0];
    return d * d;
  });
  Rational scale(1, 1LL << h);
  w.gap_clause = w.gap >= Rational(31) * scale;
  w.bounded_clause = w.second_moment <= Rational(136) * scale;
  if (w.gap_clause && w.bounded_clause)
    w.clause = DichotomyClause::Both;
  else if (w.gap_clause)
    w.clause = DichotomyClause::ProfitGap;
  else if (w.bounded_clause)
    w.clause = DichotomyClause::IncrementBounded;
  else
    throw std::logic_error("dichotomy_witness: neither clause holds (mechanism outside the upper triangle?)");
  return w;
}

}  // namespace bitrade
