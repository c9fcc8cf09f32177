// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "riskscope/linalg.hpp"
#include "riskscope/rng.hpp"

namespace riskscope::dirichlet {

using numerics::SymMatrix;
using numerics::Vec;

/// Dirichlet parameter vector: every component non-negative, positive sum.
struct DirParams {
  Vec alpha;

  double total() const;
  void validate() const;  // throws InvalidParameter on negative or non-finite entries
};

/// alpha / sum(alpha). Throws AllZero for a zero parameter vector.
Vec mean(const DirParams& params);

/// Covariance of the Dirichlet distribution: a_i (a0 - a_i) / (a0^2 (a0 + 1))
/// on the diagonal and -a_i a_j / (a0^2 (a0 + 1)) off it. Rows sum to zero up
/// to rounding (simplex constraint).
SymMatrix covariance(const DirParams& params);

/// Equal-tail marginal credible interval for one component at tail mass beta:
/// Beta(a_l, a0 - a_l) quantiles at beta/2 and 1 - beta/2. Degenerate
/// marginals use the documented conventions: a_l = 0 maps to (0, 0) and
/// a_l = a0 maps to (1, 1).
std::pair<double, double> marginal_credible(const DirParams& params, std::size_t level,
                                            double beta);

/// n draws as normalized Gamma(alpha_l, 1) vectors. Requires every alpha_l > 0
/// (NonPositiveAlpha otherwise).
std::vector<Vec> sample(const DirParams& params, std::size_t n, numerics::Rng& rng);

}  // namespace riskscope::dirichlet
