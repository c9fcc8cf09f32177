// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "riskscope/errors.hpp"
#include "riskscope/parallel.hpp"

namespace riskscope::baselines {

Vec scott_bandwidths(std::span<const Vec> points) {
  if (points.empty()) throw InvalidParameter("scott_bandwidths: needs at least one point");
  const std::size_t d = points.front().size();
  const double n = static_cast<double>(points.size());
  const double factor = std::pow(n, -1.0 / (static_cast<double>(d) + 4.0));
  Vec h(d, 1e-3);
  if (points.size() < 2) return h;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (const Vec& p : points) mean += p[k];
    mean /= n;
    double ss = 0.0;
    for (const Vec& p : points) ss += (p[k] - mean) * (p[k] - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    h[k] = sd > 0.0 ? factor * sd : 1e-3;
  }
  return h;
}

double kde_density(std::span<const Vec> points, std::span<const double> bandwidths,
                   std::span<const double> x) {
  if (points.empty()) throw InvalidParameter("kde_density: needs at least one point");
  const std::size_t d = x.size();
  if (bandwidths.size() != d) throw DimensionMismatch("kde_density: bandwidth dimension mismatch");
  double log_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * M_PI);
  for (double h : bandwidths) {
    if (!(h > 0.0)) throw InvalidParameter("kde_density: bandwidths must be positive");
    log_norm -= std::log(h);
  }
  double acc = 0.0;
  for (const Vec& p : points) {
    double e = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double z = (x[k] - p[k]) / bandwidths[k];
      e -= 0.5 * z * z;
    }
    acc += std::exp(e);
  }
  return std::exp(log_norm) * acc / static_cast<double>(points.size());
}

dirichlet::DirParams DkdeModel::posterior_params(std::span<const double> x) const {
  dirichlet::DirParams params;
  params.alpha.resize(level_count());
  for (std::size_t l = 0; l < level_count(); ++l) {
    double pseudo = 0.0;
    if (!level_points[l].empty())
      pseudo = static_cast<double>(level_points[l].size()) *
               kde_density(level_points[l], level_bandwidths[l], x);
    params.alpha[l] = pseudo + alpha_prior[l];
  }
  return params;
}

dlgp::QueryResult DkdeModel::query(std::span<const double> x, double beta) const {
  return dlgp::dirichlet_query(posterior_params(x), beta);
}

DkdeModel dkde_fit(const simbench::LabeledDataset& data, const dlgp::RobustnessLevels& levels,
                   const Vec& alpha_prior) {
  levels.validate();
  const std::size_t m = levels.count();
  data.validate(static_cast<int>(m));
  DkdeModel model;
  model.levels = levels;
  model.alpha_prior = alpha_prior.empty() ? Vec(m, 1.0 / static_cast<double>(m)) : alpha_prior;
  if (model.alpha_prior.size() != m) throw DimensionMismatch("dkde_fit: alpha_prior size mismatch");
  model.level_points.resize(m);
  model.level_bandwidths.resize(m);
  for (std::size_t i = 0; i < data.size(); ++i)
    model.level_points[static_cast<std::size_t>(data.labels[i])].push_back(data.inputs[i]);
  for (std::size_t l = 0; l < m; ++l)
    model.level_bandwidths[l] =
        model.level_points[l].empty() ? Vec{} : scott_bandwidths(model.level_points[l]);
  return model;
}

namespace {

// Heteroscedastic GP marginal likelihood: log N(y | 0, K + diag(noise)).
double gp_log_marginal(const Matrix& k_plus_d_chol, const Vec& y, const Vec& weights) {
  const double n = static_cast<double>(y.size());
  return -0.5 * numerics::dot(y, weights) - 0.5 * numerics::chol_logdet(k_plus_d_chol) -
         0.5 * n * std::log(2.0 * M_PI);
}

Matrix chol_k_plus_noise(const std::vector<Vec>& xs, const lgp::KernelParams& params,
                         const Vec& noise) {
  numerics::SymMatrix k = lgp::kernel_matrix(xs, params);
  numerics::Matrix dense = k.dense();
  for (std::size_t i = 0; i < noise.size(); ++i) dense(i, i) += noise[i];
  try {
    return numerics::cholesky_jittered(numerics::SymMatrix::from_matrix(std::move(dense))).lower;
  } catch (const NotPositiveDefinite&) {
    throw SingularKernel("gdp_fit: kernel matrix not factorizable");
  }
}

Vec log_space_gdp(double lo, double hi, std::size_t n) {
  Vec out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(std::log(lo) + step * static_cast<double>(i));
  return out;
}

std::uint64_t hash_point(std::span<const double> x) {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (double v : x) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h ^= bits + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

std::pair<double, double> GdpModel::latent(std::span<const double> x, std::size_t level) const {
  if (level >= level_count()) throw InvalidParameter("GdpModel::latent: level out of range");
  const std::size_t n = train_x.size();
  Vec kx(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double d = x[c] - train_x[i][c];
      d2 += d * d;
    }
    kx[i] = params[level].amplitude * std::exp(-params[level].decay * d2);
  }
  const double mu = numerics::dot(kx, weights_[level]);
  const Vec v = numerics::solve_lower(chol_[level], kx);
  const double var = std::max(params[level].amplitude - numerics::dot(v, v), 1e-12);
  return {mu, var};
}

dlgp::QueryResult GdpModel::query(std::span<const double> x, double beta) const {
  if (!(beta > 0.0) || !(beta < 1.0)) throw InvalidParameter("GdpModel::query: beta in (0, 1)");
  const std::size_t m = level_count();
  std::vector<std::pair<double, double>> latents(m);
  for (std::size_t l = 0; l < m; ++l) latents[l] = latent(x, l);

  // Seeded per query point, so repeated queries are reproducible.
  numerics::Rng rng = numerics::Rng(seed).child(hash_point(x));
  std::vector<Vec> samples(m, Vec(draws));
  Vec f(m);
  for (std::size_t s = 0; s < draws; ++s) {
    double fmax = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < m; ++l) {
      f[l] = latents[l].first + std::sqrt(latents[l].second) * rng.normal();
      fmax = std::max(fmax, f[l]);
    }
    double z = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      f[l] = std::exp(f[l] - fmax);
      z += f[l];
    }
    for (std::size_t l = 0; l < m; ++l) samples[l][s] = f[l] / z;
  }

  dlgp::QueryResult r;
  r.mean.assign(m, 0.0);
  for (std::size_t l = 0; l < m; ++l) {
    for (double v : samples[l]) r.mean[l] += v;
    r.mean[l] /= static_cast<double>(draws);
  }
  numerics::Matrix cov(m, m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t s = 0; s < draws; ++s)
        acc += (samples[i][s] - r.mean[i]) * (samples[j][s] - r.mean[j]);
      const double c = acc / static_cast<double>(draws - 1);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  r.cov = numerics::SymMatrix::from_matrix(std::move(cov));

  r.bounds.resize(m);
  double width = 0.0;
  // Empirical equal-tail quantiles with linear interpolation between ranks.
  const auto quantile = [&](Vec& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
  };
  for (std::size_t l = 0; l < m; ++l) {
    std::sort(samples[l].begin(), samples[l].end());
    r.bounds[l] = {quantile(samples[l], beta / 2.0), quantile(samples[l], 1.0 - beta / 2.0)};
    width += r.bounds[l].second - r.bounds[l].first;
  }
  r.band = width / static_cast<double>(m);
  return r;
}

void GdpModel::refresh_factors() {
  const std::size_t m = level_count();
  chol_.assign(m, {});
  weights_.assign(m, {});
  numerics::parallel_for(m, [&](std::size_t l) {
    chol_[l] = chol_k_plus_noise(train_x, params[l], noise[l]);
    weights_[l] = numerics::chol_solve(chol_[l], targets[l]);
  });
}

GdpModel gdp_fit(const simbench::LabeledDataset& data, const dlgp::RobustnessLevels& levels,
                 const GdpConfig& config) {
  levels.validate();
  const std::size_t m = levels.count();
  data.validate(static_cast<int>(m));
  if (!(config.alpha_eps > 0.0)) throw InvalidParameter("gdp_fit: alpha_eps must be positive");
  if (config.draws < 2) throw InvalidParameter("gdp_fit: needs at least 2 draws");

  GdpModel model;
  model.levels = levels;
  model.train_x = data.inputs;
  model.alpha_eps = config.alpha_eps;
  model.draws = config.draws;
  model.seed = config.seed;
  model.targets.assign(m, Vec(data.size()));
  model.noise.assign(m, Vec(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t l = 0; l < m; ++l) {
      const double a =
          config.alpha_eps + (static_cast<std::size_t>(data.labels[i]) == l ? 1.0 : 0.0);
      const double v = std::log(1.0 / a + 1.0);
      model.noise[l][i] = v;
      model.targets[l][i] = std::log(a) - 0.5 * v;
    }
  }

  // Marginal-likelihood maximization over the same log-spaced grid as the
  // density estimator's hyper-parameter search, refined around the incumbent.
  model.params.assign(m, {});
  numerics::parallel_for(m, [&](std::size_t l) {
    const auto& search = config.hyper_search;
    lgp::KernelParams best;
    double best_obj = -std::numeric_limits<double>::infinity();
    bool have_best = false;
    const auto evaluate = [&](const lgp::KernelParams& cand) {
      try {
        const Matrix chol = chol_k_plus_noise(data.inputs, cand, model.noise[l]);
        const Vec w = numerics::chol_solve(chol, model.targets[l]);
        const double obj = gp_log_marginal(chol, model.targets[l], w);
        if (!have_best || obj > best_obj) {
          have_best = true;
          best_obj = obj;
          best = cand;
        }
      } catch (const Error&) {
      }
    };
    for (double a : log_space_gdp(search.lo, search.hi, search.points))
      for (double d : log_space_gdp(search.lo, search.hi, search.points))
        evaluate({.amplitude = a, .decay = d});
    if (!have_best) throw SingularKernel("gdp_fit: no factorizable kernel candidate");
    double log_spacing =
        (std::log(search.hi) - std::log(search.lo)) / static_cast<double>(search.points - 1);
    for (std::size_t round = 0; round < search.refine_rounds; ++round) {
      const lgp::KernelParams centre = best;
      const auto span_of = [&](double v) {
        const double lo = std::max(search.lo, v * std::exp(-log_spacing));
        const double hi = std::min(search.hi, v * std::exp(log_spacing));
        return log_space_gdp(lo, hi, search.refine_points);
      };
      for (double a : span_of(centre.amplitude))
        for (double d : span_of(centre.decay)) evaluate({.amplitude = a, .decay = d});
      log_spacing *= 2.0 / static_cast<double>(search.refine_points - 1);
    }
    model.params[l] = best;
  });

  model.refresh_factors();
  return model;
}

}  // namespace riskscope::baselines
