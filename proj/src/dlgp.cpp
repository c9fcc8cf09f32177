// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/dlgp.hpp"

#include <cmath>
#include <limits>

#include "riskscope/errors.hpp"
#include "riskscope/parallel.hpp"
#include "riskscope/special.hpp"

namespace riskscope::dlgp {

void RobustnessLevels::validate() const {
  if (boundaries.empty()) throw InvalidParameter("RobustnessLevels: need at least one boundary");
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (!std::isfinite(boundaries[i])) throw InvalidParameter("RobustnessLevels: non-finite boundary");
    if (i > 0 && !(boundaries[i] > boundaries[i - 1]))
      throw InvalidParameter("RobustnessLevels: boundaries must be strictly increasing");
  }
}

int RobustnessLevels::classify(double rho) const {
  if (!std::isfinite(rho)) throw NonFinite("classify: non-finite robustness value");
  // Intervals are right-closed, so a boundary value belongs to the left level.
  for (std::size_t i = 0; i < boundaries.size(); ++i)
    if (rho <= boundaries[i]) return static_cast<int>(i);
  return static_cast<int>(boundaries.size());
}

double RobustnessLevels::representative(int level) const {
  validate();
  const auto l = static_cast<std::size_t>(level);
  if (level < 0 || l >= count()) throw InvalidParameter("representative: level out of range");
  if (l == 0) return boundaries.front() - 1.0;
  if (l == boundaries.size()) return boundaries.back() + 1.0;
  return 0.5 * (boundaries[l - 1] + boundaries[l]);
}

LambdaPrior LambdaPrior::from_mode_variance(double mode, double variance) {
  if (!(mode > 0.0) || !(variance > 0.0))
    throw InvalidParameter("LambdaPrior: mode and variance must be positive");
  // mode = (shape - 1) scale, variance = shape scale^2.
  const double ratio = mode * mode / variance;
  const double shape = 0.5 * (ratio + 2.0 + std::sqrt(ratio * ratio + 4.0 * ratio));
  const double scale = mode / (shape - 1.0);
  LambdaPrior p{.shape = shape, .scale = scale};
  p.validate();
  return p;
}

void LambdaPrior::validate() const {
  if (!(shape > 1.0) || !(scale > 0.0))
    throw InvalidParameter("LambdaPrior: requires shape > 1 and scale > 0");
}

double LambdaPrior::log_density(double lambda) const {
  if (!(lambda > 0.0)) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(lambda) - lambda / scale - shape * std::log(scale) -
         numerics::log_gamma(shape);
}

double DlgpModel::pseudo_count(std::span<const double> x, double lambda_value,
                               std::size_t level) const {
  if (level >= level_count()) throw InvalidParameter("pseudo_count: level out of range");
  if (!(lambda_value >= 0.0)) throw InvalidParameter("pseudo_count: lambda must be non-negative");
  const std::size_t cell = grid.cell_index(x);
  const auto& post = level_posteriors[level];
  const double n_l = static_cast<double>(post.fit.count);
  const double value = n_l * (post.density.mean[cell] - lambda_value * post.density.stdev[cell]);
  return std::max(value, 0.0);
}

dirichlet::DirParams DlgpModel::posterior_params(std::span<const double> x,
                                                 double lambda_value) const {
  dirichlet::DirParams params;
  params.alpha.resize(level_count());
  for (std::size_t l = 0; l < level_count(); ++l)
    params.alpha[l] = pseudo_count(x, lambda_value, l) + alpha_prior[l];
  return params;
}

dirichlet::DirParams DlgpModel::posterior_params(std::span<const double> x) const {
  return posterior_params(x, lambda);
}

QueryResult dirichlet_query(const dirichlet::DirParams& params, double beta) {
  QueryResult r;
  r.mean = dirichlet::mean(params);
  r.cov = dirichlet::covariance(params);
  r.bounds.resize(params.alpha.size());
  double width = 0.0;
  for (std::size_t l = 0; l < params.alpha.size(); ++l) {
    r.bounds[l] = dirichlet::marginal_credible(params, l, beta);
    width += r.bounds[l].second - r.bounds[l].first;
  }
  r.band = width / static_cast<double>(params.alpha.size());
  return r;
}

QueryResult DlgpModel::query(std::span<const double> x, double beta) const {
  return dirichlet_query(posterior_params(x), beta);
}

double lambda_objective(const DlgpModel& model, const simbench::LabeledDataset& data,
                        double lambda_value, const LambdaPrior& prior) {
  if (!(lambda_value >= 0.0)) return -std::numeric_limits<double>::infinity();
  double acc = prior.log_density(lambda_value);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const dirichlet::DirParams params = model.posterior_params(data.inputs[i], lambda_value);
    const double total = params.total();
    const double own = params.alpha[static_cast<std::size_t>(data.labels[i])];
    // Dirichlet mean identity: the label probability is alpha_l / alpha_0.
    acc += std::log(own) - std::log(total);
  }
  return acc;
}

std::vector<LevelStage> fit_level_posteriors(const lgp::Grid& grid, const lgp::CellCounts& counts,
                                             const lgp::HyperPrior& hyper_prior,
                                             const lgp::HyperSearch& hyper_search,
                                             std::size_t hyper_ensemble) {
  const std::size_t m = counts.level_count();
  const std::size_t keep = std::max<std::size_t>(hyper_ensemble, 1);
  std::vector<LevelStage> stages(m);
  numerics::parallel_for(m, [&](std::size_t l) {
    const auto& level_counts = counts.per_level[l];
    std::vector<lgp::HyperCandidate> candidates;
    const lgp::KernelParams map_params =
        lgp::hyperparam_map(grid, level_counts, hyper_prior, hyper_search, &candidates);
    LevelStage stage;
    stage.map_fit = lgp::laplace_fit(grid, level_counts, map_params);

    // Posterior-mass weights over the scored candidates; the MAP incumbent
    // comes first, near-duplicates and negligible mass are dropped.
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.objective > b.objective; });
    const double top = candidates.empty() ? 0.0 : candidates.front().objective;
    stage.ensemble.push_back(stage.map_fit);
    stage.weights.push_back(1.0);
    for (const auto& cand : candidates) {
      if (stage.ensemble.size() >= keep) break;
      if (cand.objective < top - 8.0) break;
      const bool duplicate = [&] {
        for (const auto& member : stage.ensemble) {
          const double ra = cand.params.amplitude / member.params.amplitude;
          const double rd = cand.params.decay / member.params.decay;
          if (ra > 0.9 && ra < 1.1 && rd > 0.9 && rd < 1.1) return true;
        }
        return false;
      }();
      if (duplicate) continue;
      try {
        stage.ensemble.push_back(lgp::laplace_fit(grid, level_counts, cand.params));
        stage.weights.push_back(std::exp(cand.objective - top));
      } catch (const Error&) {
      }
    }
    double total = 0.0;
    for (double w : stage.weights) total += w;
    for (double& w : stage.weights) w /= total;
    stages[l] = std::move(stage);
  });
  return stages;
}

DlgpModel assemble_model(std::vector<LevelStage> level_stages, const lgp::Grid& grid,
                         const RobustnessLevels& levels, const simbench::LabeledDataset& data,
                         const DlgpConfig& config) {
  const std::size_t m = level_stages.size();
  if (m != levels.count()) throw DimensionMismatch("assemble_model: fits do not match levels");

  DlgpModel model;
  model.grid = grid;
  model.levels = levels;
  model.alpha_prior = config.alpha_prior;
  if (model.alpha_prior.empty())
    model.alpha_prior.assign(m, 1.0 / static_cast<double>(m));
  if (model.alpha_prior.size() != m)
    throw DimensionMismatch("assemble_model: alpha_prior size mismatch");
  for (double a : model.alpha_prior)
    if (!(a >= 0.0)) throw InvalidParameter("assemble_model: alpha_prior must be non-negative");

  numerics::Rng rng(config.seed);
  model.level_posteriors.resize(m);
  model.empty_levels.resize(m);
  numerics::parallel_for(m, [&](std::size_t l) {
    LevelStage& stage = level_stages[l];
    lgp::DensityMoments moments =
        stage.ensemble.size() > 1
            ? lgp::density_moments_mixture(stage.ensemble, stage.weights, grid,
                                           config.moment_draws, rng.child(l))
            : lgp::density_moments(stage.map_fit, grid, config.moment_draws, rng.child(l));
    model.empty_levels[l] = stage.map_fit.count == 0;
    model.level_posteriors[l] = {std::move(stage.map_fit), std::move(moments)};
  });

  if (config.lambda_fixed) {
    if (!(*config.lambda_fixed >= 0.0)) throw InvalidParameter("lambda_fixed must be non-negative");
    model.lambda = *config.lambda_fixed;
    model.lambda_optimized = false;
    return model;
  }

  config.lambda_prior.validate();
  for (double a : model.alpha_prior)
    if (!(a > 0.0))
      throw InvalidParameter("lambda MAP requires a strictly positive alpha_prior");
  const auto objective = [&](double lam) {
    return lambda_objective(model, data, lam, config.lambda_prior);
  };
  model.lambda = numerics::maximize_1d(objective, 0.0, config.lambda_max, 1e-8);
  model.lambda_optimized = true;
  return model;
}

DlgpModel fit(const simbench::LabeledDataset& data, const RobustnessLevels& levels, const Vec& lo,
              const Vec& hi, const DlgpConfig& config) {
  levels.validate();
  data.validate(static_cast<int>(levels.count()));
  const lgp::Grid grid = lgp::make_grid(lo, hi, config.grid_width);
  const lgp::CellCounts counts = lgp::bin_counts(grid, data, static_cast<int>(levels.count()));
  std::vector<LevelStage> stages = fit_level_posteriors(grid, counts, config.hyper_prior,
                                                        config.hyper_search, config.hyper_ensemble);
  return assemble_model(std::move(stages), grid, levels, data, config);
}

}  // namespace riskscope::dlgp
