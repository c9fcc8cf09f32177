// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "riskscope/rng.hpp"

namespace riskscope::numerics {

using Vec = std::vector<double>;

/// Dense row-major matrix. Only the operations the estimator needs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

/// Symmetric matrix with validated invariants: entries finite and symmetric
/// within 1e-12 relative tolerance.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : m_(n, n, 0.0) {}

  /// Validates symmetry and finiteness; throws InvalidParameter on violation.
  static SymMatrix from_matrix(Matrix m);
  static SymMatrix identity(std::size_t n);

  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  /// Writes both (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  std::size_t size() const { return m_.rows(); }
  const Matrix& dense() const { return m_; }
  double trace() const;

 private:
  Matrix m_;
};

Vec matvec(const Matrix& a, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Lower-triangular Cholesky factor of a positive definite matrix.
/// Throws NotPositiveDefinite when a pivot falls at or below the
/// positivity threshold.
Matrix cholesky(const SymMatrix& a);

struct JitteredCholesky {
  Matrix lower;
  double jitter;  // additive diagonal term actually used
};

/// Cholesky with the retry ladder {0, 1e-10, 1e-8, 1e-6} x trace/n added to the
/// diagonal. An all-zero matrix factors to zero. Throws NotPositiveDefinite
/// once the ladder is exhausted.
JitteredCholesky cholesky_jittered(const SymMatrix& a);

/// Solves L y = b for lower-triangular L.
Vec solve_lower(const Matrix& l, std::span<const double> b);
/// Solves L^T y = b for lower-triangular L.
Vec solve_lower_t(const Matrix& l, std::span<const double> b);
/// Solves A x = b given the Cholesky factor L of A.
Vec chol_solve(const Matrix& l, std::span<const double> b);
/// log det A from its Cholesky factor.
double chol_logdet(const Matrix& l);

/// Draws n samples mean + L z with z standard normal, L from cholesky_jittered.
std::vector<Vec> mvn_sample(std::span<const double> mean, const SymMatrix& cov, std::size_t n,
                            Rng& rng);

}  // namespace riskscope::numerics
