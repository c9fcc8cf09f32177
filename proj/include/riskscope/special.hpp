// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <functional>

namespace riskscope::numerics {

/// ln Gamma(x) for x > 0 (Lanczos approximation).
double log_gamma(double x);

/// Regularized incomplete beta I_x(a, b) via continued fraction with
/// log-gamma normalization. Requires a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// Inverse of I_x(a, b) in p by bisection: returns x with I_x(a,b) = p.
/// Throws InvalidParameter for non-positive a, b or p outside (0, 1).
double beta_quantile(double a, double b, double p);

/// Argmax of f over [lo, hi]: 200-point uniform grid, then golden-section
/// refinement around the best grid point until the bracket is narrower than
/// tol. Non-finite values of f are treated as minus infinity.
double maximize_1d(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace riskscope::numerics
