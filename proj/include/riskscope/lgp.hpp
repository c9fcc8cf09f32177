// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "riskscope/dataset.hpp"
#include "riskscope/linalg.hpp"
#include "riskscope/rng.hpp"

namespace riskscope::lgp {

using numerics::Matrix;
using numerics::SymMatrix;
using numerics::Vec;

/// Uniform partition of an axis-aligned box into cells of edge length `width`.
/// Cell i covers [lo + i*width, lo + (i+1)*width) per axis; a point exactly on
/// an interior edge belongs to the lower-index cell.
struct Grid {
  Vec lo;
  Vec hi;
  double width = 0.0;
  std::vector<std::size_t> shape;

  std::size_t dim() const { return lo.size(); }
  std::size_t cell_count() const;
  double cell_area() const;  // width^dim
  Vec center(std::size_t index) const;
  std::vector<Vec> centers() const;
  /// Throws OutOfRegion for points outside [lo, hi].
  std::size_t cell_index(std::span<const double> x) const;

  bool operator==(const Grid&) const = default;
};

/// Throws TooManyCells when the cell count would exceed max_cells.
Grid make_grid(const Vec& lo, const Vec& hi, double width, std::size_t max_cells = 100000);

/// Per-level, per-cell sample counts.
struct CellCounts {
  std::vector<std::vector<std::size_t>> per_level;  // [level][cell]
  std::vector<std::size_t> totals;                  // samples per level

  std::size_t level_count() const { return per_level.size(); }
};

CellCounts bin_counts(const Grid& grid, std::span<const Vec> inputs, std::span<const int> labels,
                      int level_count);
CellCounts bin_counts(const Grid& grid, const simbench::LabeledDataset& dataset, int level_count);

/// Squared-exponential kernel amplitude * exp(-decay * ||x - x'||^2);
/// both parameters positive.
struct KernelParams {
  double amplitude = 1.0;
  double decay = 1.0;

  void validate() const;
  bool operator==(const KernelParams&) const = default;
};

SymMatrix kernel_matrix(const std::vector<Vec>& points, const KernelParams& params);

struct LoglikResult {
  double value;
  Vec gradient;
};

/// Multinomial log likelihood of grid counts under latent field f:
///   sum_i c_i f_i - N log sum_k exp(f_k),
/// with gradient c_i - N softmax(f)_i. Log-sum-exp uses max shift.
LoglikResult count_log_likelihood(std::span<const std::size_t> counts, std::span<const double> f);

Vec softmax(std::span<const double> f);

/// Gaussian (Laplace) approximation of the latent-field posterior for one level.
struct LaplaceFit {
  Vec mode;                  // stationary point of the penalized log likelihood
  Matrix cov_factor;         // lower Cholesky factor of (K^-1 + W)^-1
  KernelParams params;
  double log_marginal = 0.0; // Laplace evidence approximation at these params
  Vec newton_objectives;     // objective value after each accepted Newton step
  std::size_t count = 0;     // samples behind the fit

  std::size_t cells() const { return mode.size(); }
};

/// Newton iteration with backtracking line search; converged when the
/// gradient norm falls below 1e-6, or, for extreme kernel scales where the
/// objective improvement drops under double resolution first, when the
/// Newton decrement is below 1e-9 of the objective magnitude. Throws
/// NoConvergence after max_iter iterations.
LaplaceFit laplace_fit(const Grid& grid, std::span<const std::size_t> counts,
                       const KernelParams& params, std::size_t max_iter = 100);

/// Independent half-normal hyper-priors on both kernel parameters.
struct HyperPrior {
  double amplitude_std = 1.0;
  double decay_std = 1.0;

  double log_density(const KernelParams& p) const;
};

/// Log-spaced search grid with local refinement rounds around the incumbent.
struct HyperSearch {
  double lo = 1e-2;
  double hi = 1e2;
  std::size_t points = 15;        // per axis on the coarse grid
  std::size_t refine_rounds = 2;
  std::size_t refine_points = 5;  // per axis per refinement round
};

/// One evaluated kernel-parameter candidate: Laplace log marginal plus the
/// log hyper-prior.
struct HyperCandidate {
  KernelParams params;
  double objective = 0.0;
};

/// MAP kernel parameters: maximizes the Laplace-approximated log marginal
/// likelihood plus the log hyper-prior over the search grid. Deterministic.
/// With all-zero counts the likelihood term is flat and the result is the grid
/// point closest to the hyper-prior mode, i.e. the lower grid corner.
/// When `coarse_out` is given it receives the scored coarse-grid candidates
/// (log-uniform quadrature nodes of the hyper-parameter posterior) plus the
/// refined incumbent.
KernelParams hyperparam_map(const Grid& grid, std::span<const std::size_t> counts,
                            const HyperPrior& prior, const HyperSearch& search = {},
                            std::vector<HyperCandidate>* coarse_out = nullptr);

struct DensityMoments {
  Vec mean;   // p_E per cell
  Vec stdev;  // p_sigma per cell
};

/// Monte Carlo moments of the normalized density field: each posterior draw f
/// maps to exp(f_i) / (sum_k exp(f_k) * cell_area). Seeded and reproducible.
DensityMoments density_moments(const LaplaceFit& fit, const Grid& grid, std::size_t draws,
                               numerics::Rng rng);

/// Moments of a weighted mixture of Gaussian posteriors (one per retained
/// kernel-parameter candidate). Draws are allocated proportionally to the
/// weights; the pooled mean and spread therefore carry the hyper-parameter
/// uncertainty in addition to the per-fit field uncertainty.
DensityMoments density_moments_mixture(std::span<const LaplaceFit> fits,
                                       std::span<const double> weights, const Grid& grid,
                                       std::size_t draws, numerics::Rng rng);

/// Fitted per-level posterior together with its density moment fields.
struct LgpPosterior {
  LaplaceFit fit;
  DensityMoments density;
};

}  // namespace riskscope::lgp
