// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/special.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "riskscope/errors.hpp"

namespace riskscope::numerics {

double log_gamma(double x) {
  if (!(x > 0.0)) throw InvalidParameter("log_gamma: requires x > 0");
  static constexpr std::array<double, 9> coef = {
      0.99999999999980993,  676.5203681218851,   -1259.1392167224028,
      771.32342877765313,   -176.61502916214059, 12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection keeps the Lanczos series in its accurate range.
    return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double a = coef[0];
  const double t = z + 7.5;
  for (std::size_t i = 1; i < coef.size(); ++i) a += coef[i] / (z + static_cast<double>(i));
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(a);
}

namespace {

// Modified Lentz continued fraction for the incomplete beta function.
double beta_cf(double a, double b, double x) {
  constexpr double eps = 1e-15;
  constexpr double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("incomplete_beta: requires a, b > 0");
  if (!(x >= 0.0) || !(x <= 1.0)) throw InvalidParameter("incomplete_beta: requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front =
      log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double beta_quantile(double a, double b, double p) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("beta_quantile: requires a, b > 0");
  if (!(p > 0.0) || !(p < 1.0)) throw InvalidParameter("beta_quantile: requires p in (0, 1)");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (incomplete_beta(a, b, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double maximize_1d(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw InvalidParameter("maximize_1d: requires lo < hi");
  const auto safe = [&f](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  constexpr int grid_points = 200;
  double best_x = lo;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);
    const double v = safe(x);
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }

  const double spacing = (hi - lo) / (grid_points - 1);
  double a = std::max(lo, best_x - spacing);
  double b = std::min(hi, best_x + spacing);
  constexpr double inv_phi = 0.61803398874989484820;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = safe(x1);
  double f2 = safe(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = safe(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = safe(x1);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fm = safe(mid);
  if (fm >= best_v) return mid;
  if (f1 >= best_v && f1 >= f2) return x1;
  if (f2 >= best_v) return x2;
  return best_x;
}

}  // namespace riskscope::numerics
