// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "riskscope/dataset.hpp"
#include "riskscope/dirichlet.hpp"
#include "riskscope/levels.hpp"
#include "riskscope/lgp.hpp"

namespace riskscope::dlgp {

using numerics::Vec;

/// Gamma prior on the conservativeness parameter; shape > 1 so the mode
/// (shape - 1) * scale exists.
struct LambdaPrior {
  double shape = 3.0;
  double scale = 1.0;

  static LambdaPrior from_mode_variance(double mode, double variance);
  double mode() const { return (shape - 1.0) * scale; }
  double log_density(double lambda) const;  // -inf at lambda <= 0
  void validate() const;
};

struct DlgpConfig {
  double grid_width = 0.5;
  Vec alpha_prior;  // defaults to 1/m per level when empty
  LambdaPrior lambda_prior;
  double lambda_max = 10.0;
  std::optional<double> lambda_fixed;  // skips the MAP search when set
  std::size_t moment_draws = 2000;
  lgp::HyperPrior hyper_prior;
  lgp::HyperSearch hyper_search;
  /// Kernel-parameter candidates retained for the density moments, weighted
  /// by their posterior mass. 1 reduces to the MAP fit alone.
  std::size_t hyper_ensemble = 12;
  std::uint64_t seed = 0;
};

/// Shared distributional query result for every estimator in this library.
struct QueryResult {
  Vec mean;
  numerics::SymMatrix cov;
  std::vector<std::pair<double, double>> bounds;  // per-level equal-tail interval
  double band = 0.0;                              // mean interval width
};

/// Posterior Dirichlet field assembled from the per-level density posteriors.
struct DlgpModel {
  lgp::Grid grid;
  RobustnessLevels levels;
  Vec alpha_prior;
  double lambda = 0.0;
  bool lambda_optimized = false;
  std::vector<lgp::LgpPosterior> level_posteriors;
  std::vector<bool> empty_levels;

  std::size_t level_count() const { return level_posteriors.size(); }

  /// max{ N_l (p_E - lambda p_sigma), 0 } read from the cell containing x.
  double pseudo_count(std::span<const double> x, double lambda_value, std::size_t level) const;
  dirichlet::DirParams posterior_params(std::span<const double> x, double lambda_value) const;
  dirichlet::DirParams posterior_params(std::span<const double> x) const;

  QueryResult query(std::span<const double> x, double beta = 0.05) const;
};

/// Sum over the data of log Dirichlet-mean probabilities of the observed
/// labels plus the log prior density of lambda.
double lambda_objective(const DlgpModel& model, const simbench::LabeledDataset& data,
                        double lambda_value, const LambdaPrior& prior);

/// Deterministic per-level posterior stage. The MAP fit defines the stored
/// posterior; the ensemble holds the highest-mass kernel candidates (MAP
/// first) with normalized posterior weights for the moment stage.
struct LevelStage {
  lgp::LaplaceFit map_fit;
  std::vector<lgp::LaplaceFit> ensemble;
  Vec weights;
};

std::vector<LevelStage> fit_level_posteriors(const lgp::Grid& grid, const lgp::CellCounts& counts,
                                             const lgp::HyperPrior& hyper_prior,
                                             const lgp::HyperSearch& hyper_search,
                                             std::size_t hyper_ensemble);

/// Moment draw + lambda selection stage on top of precomputed level fits.
DlgpModel assemble_model(std::vector<LevelStage> level_stages, const lgp::Grid& grid,
                         const RobustnessLevels& levels, const simbench::LabeledDataset& data,
                         const DlgpConfig& config);

/// Full pipeline from a labeled dataset over the region [lo, hi].
DlgpModel fit(const simbench::LabeledDataset& data, const RobustnessLevels& levels, const Vec& lo,
              const Vec& hi, const DlgpConfig& config);

/// Query helper shared by the baseline estimators: Dirichlet mean, covariance,
/// per-level credible bounds and their mean width.
QueryResult dirichlet_query(const dirichlet::DirParams& params, double beta);

}  // namespace riskscope::dlgp
