// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskscope/errors.hpp"

namespace riskscope::numerics {

SymMatrix SymMatrix::from_matrix(Matrix m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("SymMatrix: matrix not square");
  double max_abs = 0.0;
  for (double v : m.data()) {
    if (!std::isfinite(v)) throw InvalidParameter("SymMatrix: non-finite entry");
    max_abs = std::max(max_abs, std::fabs(v));
  }
  const double tol = 1e-12 * std::max(max_abs, 1.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::fabs(m(i, j) - m(j, i)) > tol)
        throw InvalidParameter("SymMatrix: symmetry violated beyond 1e-12 relative tolerance");
  SymMatrix s;
  s.m_ = std::move(m);
  return s;
}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix s(n);
  for (std::size_t i = 0; i < n; ++i) s.set(i, i, 1.0);
  return s;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < size(); ++i) t += m_(i, i);
  return t;
}

Vec matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matvec: size mismatch");
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.data().data() + i * a.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul: size mismatch");
  Matrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.data().data() + i * c.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.data().data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

// In-place lower Cholesky of (a + jitter I). Returns false on a non-positive pivot.
bool try_cholesky(const SymMatrix& a, double jitter, Matrix& out) {
  const std::size_t n = a.size();
  out = Matrix(n, n, 0.0);
  double diag_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::fabs(a(i, i)) + jitter);
  const double threshold = diag_scale * n * 1e-15;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) d -= out(j, k) * out(j, k);
    if (!(d > threshold)) return false;
    const double ljj = std::sqrt(d);
    out(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      const double* li = out.data().data() + i * n;
      const double* lj = out.data().data() + j * n;
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      out(i, j) = s / ljj;
    }
  }
  return true;
}

}  // namespace

Matrix cholesky(const SymMatrix& a) {
  Matrix l;
  if (!try_cholesky(a, 0.0, l)) throw NotPositiveDefinite("cholesky: non-positive pivot");
  return l;
}

JitteredCholesky cholesky_jittered(const SymMatrix& a) {
  const std::size_t n = a.size();
  const double scale = n > 0 ? a.trace() / static_cast<double>(n) : 0.0;
  if (scale == 0.0) {
    // A PSD matrix with zero trace is the zero matrix.
    for (double v : a.dense().data())
      if (v != 0.0) throw NotPositiveDefinite("cholesky_jittered: zero trace but nonzero entries");
    return {Matrix(n, n, 0.0), 0.0};
  }
  for (double rel : {0.0, 1e-10, 1e-8, 1e-6}) {
    Matrix l;
    if (try_cholesky(a, rel * scale, l)) return {std::move(l), rel * scale};
  }
  throw NotPositiveDefinite("cholesky_jittered: jitter ladder exhausted");
}

Vec solve_lower(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw DimensionMismatch("solve_lower: size mismatch");
  Vec y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    const double* li = l.data().data() + i * n;
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * y[k];
    y[i] = s / li[i];
  }
  return y;
}

Vec solve_lower_t(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw DimensionMismatch("solve_lower_t: size mismatch");
  Vec y(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * y[k];
    y[ii] = s / l(ii, ii);
  }
  return y;
}

Vec chol_solve(const Matrix& l, std::span<const double> b) {
  Vec y = solve_lower(l, b);
  return solve_lower_t(l, y);
}

double chol_logdet(const Matrix& l) {
  double acc = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

std::vector<Vec> mvn_sample(std::span<const double> mean, const SymMatrix& cov, std::size_t n,
                            Rng& rng) {
  const std::size_t d = cov.size();
  if (mean.size() != d) throw DimensionMismatch("mvn_sample: mean/cov dimension mismatch");
  const Matrix l = cholesky_jittered(cov).lower;
  std::vector<Vec> out;
  out.reserve(n);
  Vec z(d);
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& v : z) v = rng.normal();
    Vec x(mean.begin(), mean.end());
    for (std::size_t i = 0; i < d; ++i) {
      const double* li = l.data().data() + i * d;
      double acc = 0.0;
      for (std::size_t k = 0; k <= i; ++k) acc += li[k] * z[k];
      x[i] += acc;
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace riskscope::numerics
