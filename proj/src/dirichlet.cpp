// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/dirichlet.hpp"

#include <cmath>

#include "riskscope/errors.hpp"
#include "riskscope/special.hpp"

namespace riskscope::dirichlet {

double DirParams::total() const {
  double s = 0.0;
  for (double a : alpha) s += a;
  return s;
}

void DirParams::validate() const {
  if (alpha.empty()) throw InvalidParameter("DirParams: empty parameter vector");
  for (double a : alpha)
    if (!(a >= 0.0) || !std::isfinite(a))
      throw InvalidParameter("DirParams: components must be finite and non-negative");
}

Vec mean(const DirParams& params) {
  params.validate();
  const double a0 = params.total();
  if (a0 <= 0.0) throw AllZero("dirichlet::mean: all parameters are zero");
  Vec m(params.alpha.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = params.alpha[i] / a0;
  return m;
}

SymMatrix covariance(const DirParams& params) {
  params.validate();
  const double a0 = params.total();
  if (a0 <= 0.0) throw AllZero("dirichlet::covariance: all parameters are zero");
  const double denom = a0 * a0 * (a0 + 1.0);
  const std::size_t m = params.alpha.size();
  SymMatrix cov(m);
  for (std::size_t i = 0; i < m; ++i) {
    cov.set(i, i, params.alpha[i] * (a0 - params.alpha[i]) / denom);
    for (std::size_t j = i + 1; j < m; ++j)
      cov.set(i, j, -params.alpha[i] * params.alpha[j] / denom);
  }
  return cov;
}

std::pair<double, double> marginal_credible(const DirParams& params, std::size_t level,
                                            double beta) {
  params.validate();
  if (level >= params.alpha.size()) throw InvalidParameter("marginal_credible: level out of range");
  if (!(beta > 0.0) || !(beta < 1.0)) throw InvalidParameter("marginal_credible: beta in (0, 1)");
  const double a = params.alpha[level];
  const double rest = params.total() - a;
  if (a <= 0.0) return {0.0, 0.0};
  if (rest <= 0.0) return {1.0, 1.0};
  const double lower = numerics::beta_quantile(a, rest, beta / 2.0);
  const double upper = numerics::beta_quantile(a, rest, 1.0 - beta / 2.0);
  return {lower, upper};
}

std::vector<Vec> sample(const DirParams& params, std::size_t n, numerics::Rng& rng) {
  params.validate();
  for (double a : params.alpha)
    if (!(a > 0.0)) throw NonPositiveAlpha("dirichlet::sample: requires positive parameters");
  std::vector<Vec> out;
  out.reserve(n);
  const std::size_t m = params.alpha.size();
  for (std::size_t s = 0; s < n; ++s) {
    Vec g(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      g[i] = rng.gamma(params.alpha[i], 1.0);
      total += g[i];
    }
    for (auto& v : g) v /= total;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace riskscope::dirichlet
