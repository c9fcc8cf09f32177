// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "riskscope/dataset.hpp"
#include "riskscope/dlgp.hpp"
#include "riskscope/levels.hpp"
#include "riskscope/lgp.hpp"

namespace riskscope::baselines {

using numerics::Matrix;
using numerics::Vec;

/// Scott's rule per-dimension bandwidths h_k = n^{-1/(d+4)} sigma_k. A zero
/// sample deviation falls back to 1e-3.
Vec scott_bandwidths(std::span<const Vec> points);

/// Gaussian product-kernel density estimate at x. Requires at least one point.
double kde_density(std::span<const Vec> points, std::span<const double> bandwidths,
                   std::span<const double> x);

/// Density-based pseudo-count baseline: per-level KDE with Scott bandwidths,
/// posterior parameters N_l * kde_l(x) + alpha_prior.
struct DkdeModel {
  dlgp::RobustnessLevels levels;
  Vec alpha_prior;
  std::vector<std::vector<Vec>> level_points;
  std::vector<Vec> level_bandwidths;

  std::size_t level_count() const { return level_points.size(); }
  dirichlet::DirParams posterior_params(std::span<const double> x) const;
  dlgp::QueryResult query(std::span<const double> x, double beta = 0.05) const;
};

DkdeModel dkde_fit(const simbench::LabeledDataset& data, const dlgp::RobustnessLevels& levels,
                   const Vec& alpha_prior);

/// Gaussian-process Dirichlet classifier: smoothed one-hot counts are matched
/// to log-normals (variance log(1/a + 1), mean log a - variance/2) and each
/// latent dimension is regressed by a GP with per-point noise equal to that
/// variance. Queries push seeded latent samples through exp-and-normalize.
struct GdpModel {
  dlgp::RobustnessLevels levels;
  std::vector<Vec> train_x;
  std::vector<Vec> targets;      // [level][point]
  std::vector<Vec> noise;        // [level][point]
  std::vector<lgp::KernelParams> params;
  double alpha_eps = 0.01;
  std::size_t draws = 2000;
  std::uint64_t seed = 0;

  std::size_t level_count() const { return targets.size(); }
  /// Latent posterior at x for one level: mean and variance.
  std::pair<double, double> latent(std::span<const double> x, std::size_t level) const;
  dlgp::QueryResult query(std::span<const double> x, double beta = 0.05) const;

  /// Rebuilds the cached kernel factors; required after deserialization.
  void refresh_factors();

 private:
  std::vector<Matrix> chol_;    // per level, chol(K + diag(noise))
  std::vector<Vec> weights_;    // per level, (K + D)^-1 targets
};

struct GdpConfig {
  double alpha_eps = 0.01;
  std::size_t draws = 2000;
  std::uint64_t seed = 0;
  lgp::HyperSearch hyper_search;
};

GdpModel gdp_fit(const simbench::LabeledDataset& data, const dlgp::RobustnessLevels& levels,
                 const GdpConfig& config);

}  // namespace riskscope::baselines
