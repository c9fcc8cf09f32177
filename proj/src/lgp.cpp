// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/lgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskscope/errors.hpp"

namespace riskscope::lgp {

std::size_t Grid::cell_count() const {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

double Grid::cell_area() const {
  double a = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) a *= width;
  return a;
}

Vec Grid::center(std::size_t index) const {
  Vec c(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    const std::size_t i = index % shape[k];
    index /= shape[k];
    c[k] = lo[k] + (static_cast<double>(i) + 0.5) * width;
  }
  return c;
}

std::vector<Vec> Grid::centers() const {
  std::vector<Vec> out(cell_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = center(i);
  return out;
}

std::size_t Grid::cell_index(std::span<const double> x) const {
  if (x.size() != dim()) throw DimensionMismatch("Grid::cell_index: dimension mismatch");
  std::size_t index = 0;
  std::size_t stride = 1;
  for (std::size_t k = 0; k < dim(); ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) throw OutOfRegion("point outside the grid region");
    const double u = (x[k] - lo[k]) / width;
    double cell = std::floor(u);
    if (cell == u && cell > 0.0) cell -= 1.0;  // boundary points go to the lower cell
    std::size_t i = static_cast<std::size_t>(cell);
    if (i >= shape[k]) i = shape[k] - 1;
    index += stride * i;
    stride *= shape[k];
  }
  return index;
}

Grid make_grid(const Vec& lo, const Vec& hi, double width, std::size_t max_cells) {
  if (lo.size() != hi.size() || lo.empty()) throw InvalidParameter("make_grid: bad region");
  if (!(width > 0.0)) throw InvalidParameter("make_grid: width must be positive");
  Grid g;
  g.lo = lo;
  g.hi = hi;
  g.width = width;
  std::size_t cells = 1;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    const double extent = hi[k] - lo[k];
    if (!(extent > 0.0)) throw InvalidParameter("make_grid: degenerate region");
    const auto n = static_cast<std::size_t>(std::ceil(extent / width - 1e-9));
    g.shape.push_back(std::max<std::size_t>(n, 1));
    cells *= g.shape.back();
    if (cells > max_cells) throw TooManyCells("make_grid: cell cap exceeded");
  }
  return g;
}

CellCounts bin_counts(const Grid& grid, std::span<const Vec> inputs, std::span<const int> labels,
                      int level_count) {
  if (inputs.size() != labels.size()) throw DimensionMismatch("bin_counts: inputs/labels mismatch");
  CellCounts cc;
  cc.per_level.assign(static_cast<std::size_t>(level_count),
                      std::vector<std::size_t>(grid.cell_count(), 0));
  cc.totals.assign(static_cast<std::size_t>(level_count), 0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || l >= level_count) throw InvalidParameter("bin_counts: label out of range");
    const std::size_t cell = grid.cell_index(inputs[i]);
    ++cc.per_level[static_cast<std::size_t>(l)][cell];
    ++cc.totals[static_cast<std::size_t>(l)];
  }
  return cc;
}

CellCounts bin_counts(const Grid& grid, const simbench::LabeledDataset& dataset, int level_count) {
  dataset.validate(level_count);
  return bin_counts(grid, dataset.inputs, dataset.labels, level_count);
}

void KernelParams::validate() const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude) || !(decay > 0.0) || !std::isfinite(decay))
    throw InvalidParameter("KernelParams: amplitude and decay must be positive and finite");
}

SymMatrix kernel_matrix(const std::vector<Vec>& points, const KernelParams& params) {
  params.validate();
  const std::size_t n = points.size();
  SymMatrix k(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < points[i].size(); ++c) {
        const double d = points[i][c] - points[j][c];
        d2 += d * d;
      }
      k.set(i, j, params.amplitude * std::exp(-params.decay * d2));
    }
  }
  return k;
}

Vec softmax(std::span<const double> f) {
  double fmax = -std::numeric_limits<double>::infinity();
  for (double v : f) fmax = std::max(fmax, v);
  Vec p(f.size());
  double z = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    p[i] = std::exp(f[i] - fmax);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

LoglikResult count_log_likelihood(std::span<const std::size_t> counts, std::span<const double> f) {
  if (counts.size() != f.size()) throw DimensionMismatch("count_log_likelihood: size mismatch");
  double total = 0.0;
  for (std::size_t c : counts) total += static_cast<double>(c);
  double fmax = -std::numeric_limits<double>::infinity();
  for (double v : f) fmax = std::max(fmax, v);
  double z = 0.0;
  double dot_cf = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    z += std::exp(f[i] - fmax);
    dot_cf += static_cast<double>(counts[i]) * f[i];
  }
  const double lse = fmax + std::log(z);
  LoglikResult r;
  r.value = total == 0.0 ? dot_cf : dot_cf - total * lse;
  r.gradient.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    r.gradient[i] = static_cast<double>(counts[i]) - total * std::exp(f[i] - fmax) / z;
  return r;
}

namespace {

// Newton mode search parametrized by a = K^-1 f, which avoids factorizing K.
// The likelihood Hessian W = N (diag(p) - p p^T) factors as V V^T with
// V = sqrt(N) (diag(sqrt(p)) - p sqrt(p)^T), so every solve reduces to the
// well-conditioned B = I + V^T K V.
struct LaplaceCore {
  Vec a;
  Vec f;
  double loglik = 0.0;
  double objective = 0.0;       // loglik - 0.5 f^T a
  double log_marginal = 0.0;
  Vec newton_objectives;
};

constexpr double kGradTol = 1e-6;

Matrix build_b(const Matrix& k, const Vec& p, const Vec& r, const Vec& u, double s, double n) {
  const std::size_t m = p.size();
  Matrix b(m, m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ki = k.data().data() + i * m;
    double* bi = b.data().data() + i * m;
    const double ri = r[i];
    const double ui = u[i];
    for (std::size_t j = 0; j < m; ++j) bi[j] = n * ri * r[j] * (ki[j] - ui - u[j] + s);
    bi[i] += 1.0;
  }
  // Exact symmetry for the factorization.
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = 0.5 * (b(i, j) + b(j, i));
      b(i, j) = v;
      b(j, i) = v;
    }
  return b;
}

LaplaceCore laplace_mode(const Matrix& k, std::span<const std::size_t> counts,
                         std::size_t max_iter, const Vec* warm_a) {
  const std::size_t m = counts.size();
  double n = 0.0;
  for (std::size_t c : counts) n += static_cast<double>(c);

  LaplaceCore core;
  core.a.assign(m, 0.0);
  if (warm_a && warm_a->size() == m) core.a = *warm_a;
  core.f = matvec(k, core.a);

  auto loglik = count_log_likelihood(counts, core.f);
  core.loglik = loglik.value;
  core.objective = core.loglik - 0.5 * numerics::dot(core.f, core.a);

  double logdet_b = 0.0;
  for (std::size_t iter = 0;; ++iter) {
    // Gradient of the penalized objective at f = K a is grad_ll - a.
    Vec grad(m);
    for (std::size_t i = 0; i < m; ++i) grad[i] = loglik.gradient[i] - core.a[i];
    const Vec p = softmax(core.f);
    Vec r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = std::sqrt(p[i]);
    const Vec u = matvec(k, p);
    const double s = numerics::dot(p, u);
    const Matrix b_mat = build_b(k, p, r, u, s, n);
    Matrix lb;
    try {
      lb = cholesky(SymMatrix::from_matrix(b_mat));
    } catch (const Error&) {
      throw NotPositiveDefinite("laplace_fit: Newton system not positive definite");
    }

    if (numerics::norm2(grad) < kGradTol) {
      logdet_b = numerics::chol_logdet(lb);
      break;
    }
    if (iter >= max_iter) throw NoConvergence("laplace_fit: Newton iteration cap reached");

    // b = W f + grad_ll with W f = n (p*f - p (p^T f)).
    const double pf = numerics::dot(p, core.f);
    Vec rhs(m);
    for (std::size_t i = 0; i < m; ++i)
      rhs[i] = n * p[i] * (core.f[i] - pf) + loglik.gradient[i];
    const Vec krhs = matvec(k, rhs);
    const double p_krhs = numerics::dot(p, krhs);
    Vec vt(m);
    const double sqrt_n = std::sqrt(n);
    for (std::size_t i = 0; i < m; ++i) vt[i] = sqrt_n * r[i] * (krhs[i] - p_krhs);
    const Vec z = numerics::chol_solve(lb, vt);
    const double rz = numerics::dot(r, z);
    Vec a_new(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = sqrt_n * (r[i] * z[i] - p[i] * rz);
    for (std::size_t i = 0; i < m; ++i) a_new[i] = n * p[i] * (core.f[i] - pf) +
                                                   loglik.gradient[i] - rhs[i];
    const Vec f_new = matvec(k, a_new);

    bool accepted = false;
    double gamma = 1.0;
    for (int half = 0; half < 40; ++half, gamma *= 0.5) {
      Vec f_try(m), a_try(m);
      for (std::size_t i = 0; i < m; ++i) {
        f_try[i] = core.f[i] + gamma * (f_new[i] - core.f[i]);
        a_try[i] = core.a[i] + gamma * (a_new[i] - core.a[i]);
      }
      auto ll_try = count_log_likelihood(counts, f_try);
      const double obj_try = ll_try.value - 0.5 * numerics::dot(f_try, a_try);
      if (obj_try > core.objective) {
        core.f = std::move(f_try);
        core.a = std::move(a_try);
        loglik = std::move(ll_try);
        core.loglik = loglik.value;
        core.objective = obj_try;
        core.newton_objectives.push_back(obj_try);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // The line search can exhaust double resolution before the absolute
      // gradient tolerance is met (tiny kernel amplitudes, near-singular
      // kernels). The Newton decrement grad . step measures the remaining
      // objective gap, so a point within rounding of the optimum still
      // counts as converged.
      Vec step(m);
      for (std::size_t i = 0; i < m; ++i) step[i] = f_new[i] - core.f[i];
      const double decrement = 0.5 * std::fabs(numerics::dot(grad, step));
      if (numerics::norm2(grad) < kGradTol ||
          decrement <= 1e-9 * (1.0 + std::fabs(core.objective))) {
        logdet_b = numerics::chol_logdet(lb);
        break;
      }
      throw NoConvergence("laplace_fit: line search stalled away from the mode");
    }
  }
  core.log_marginal = core.objective - 0.5 * logdet_b;
  return core;
}

}  // namespace

LaplaceFit laplace_fit(const Grid& grid, std::span<const std::size_t> counts,
                       const KernelParams& params, std::size_t max_iter) {
  if (counts.size() != grid.cell_count())
    throw DimensionMismatch("laplace_fit: counts do not match the grid");
  const SymMatrix k = kernel_matrix(grid.centers(), params);
  const LaplaceCore core = laplace_mode(k.dense(), counts, max_iter, nullptr);

  double n = 0.0;
  for (std::size_t c : counts) n += static_cast<double>(c);
  const std::size_t m = counts.size();

  // Posterior covariance (K^-1 + W)^-1 = K - U B^-1 U^T with U = K V.
  const Vec p = softmax(core.f);
  Vec r(m);
  for (std::size_t i = 0; i < m; ++i) r[i] = std::sqrt(p[i]);
  const Vec u = matvec(k.dense(), p);
  const double s = numerics::dot(p, u);
  const Matrix b_mat = build_b(k.dense(), p, r, u, s, n);
  const Matrix lb = cholesky(SymMatrix::from_matrix(b_mat));

  const double sqrt_n = std::sqrt(n);
  Matrix u_mat(m, m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) u_mat(i, j) = sqrt_n * r[j] * (k(i, j) - u[i]);

  Matrix x(m, m, 0.0);  // columns solve B x = U^T column
  Vec col(m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) col[i] = u_mat(j, i);
    const Vec sol = numerics::chol_solve(lb, col);
    for (std::size_t i = 0; i < m; ++i) x(i, j) = sol[i];
  }
  Matrix sigma(m, m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      double acc = k(i, j);
      const double* ui = u_mat.data().data() + i * m;
      for (std::size_t t = 0; t < m; ++t) acc -= ui[t] * x(t, j);
      sigma(i, j) = acc;
    }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < i; ++j) sigma(i, j) = sigma(j, i);

  LaplaceFit fit;
  fit.mode = core.f;
  fit.cov_factor = numerics::cholesky_jittered(SymMatrix::from_matrix(std::move(sigma))).lower;
  fit.params = params;
  fit.log_marginal = core.log_marginal;
  fit.newton_objectives = core.newton_objectives;
  fit.count = static_cast<std::size_t>(n);
  return fit;
}

double HyperPrior::log_density(const KernelParams& p) const {
  p.validate();
  auto half_normal = [](double x, double std) {
    return 0.5 * std::log(2.0 / (M_PI * std * std)) - x * x / (2.0 * std * std);
  };
  return half_normal(p.amplitude, amplitude_std) + half_normal(p.decay, decay_std);
}

namespace {

Vec log_space(double lo, double hi, std::size_t n) {
  Vec out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(std::log(lo) + step * static_cast<double>(i));
  return out;
}

}  // namespace

KernelParams hyperparam_map(const Grid& grid, std::span<const std::size_t> counts,
                            const HyperPrior& prior, const HyperSearch& search,
                            std::vector<HyperCandidate>* coarse_out) {
  if (counts.size() != grid.cell_count())
    throw DimensionMismatch("hyperparam_map: counts do not match the grid");
  const std::vector<Vec> centers = grid.centers();
  const std::size_t m = centers.size();

  // Distances never change across candidates; only the kernel map does.
  Matrix d2(m, m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < centers[i].size(); ++c) {
        const double d = centers[i][c] - centers[j][c];
        acc += d * d;
      }
      d2(i, j) = acc;
    }

  Vec warm;
  bool have_best = false;
  KernelParams best;
  double best_obj = -std::numeric_limits<double>::infinity();

  auto evaluate = [&](const KernelParams& cand, bool record) {
    Matrix k(m, m, 0.0);
    for (std::size_t i = 0; i < m * m; ++i)
      k.data()[i] = cand.amplitude * std::exp(-cand.decay * d2.data()[i]);
    try {
      const LaplaceCore core = laplace_mode(k, counts, 100, warm.empty() ? nullptr : &warm);
      warm = core.a;
      const double obj = core.log_marginal + prior.log_density(cand);
      if (record && coarse_out) coarse_out->push_back({cand, obj});
      if (!have_best || obj > best_obj) {
        have_best = true;
        best_obj = obj;
        best = cand;
      }
    } catch (const Error&) {
      // A failed candidate is simply skipped.
      warm.clear();
    }
  };

  for (double a : log_space(search.lo, search.hi, search.points))
    for (double d : log_space(search.lo, search.hi, search.points))
      evaluate({.amplitude = a, .decay = d}, true);
  if (!have_best) return {.amplitude = search.lo, .decay = search.lo};

  double log_spacing = (std::log(search.hi) - std::log(search.lo)) /
                       static_cast<double>(search.points - 1);
  for (std::size_t round = 0; round < search.refine_rounds; ++round) {
    const KernelParams centre = best;
    const auto span_of = [&](double v) {
      const double lo = std::max(search.lo, v * std::exp(-log_spacing));
      const double hi = std::min(search.hi, v * std::exp(log_spacing));
      return log_space(lo, hi, search.refine_points);
    };
    for (double a : span_of(centre.amplitude))
      for (double d : span_of(centre.decay)) evaluate({.amplitude = a, .decay = d}, false);
    log_spacing *= 2.0 / static_cast<double>(search.refine_points - 1);
  }
  if (coarse_out) coarse_out->push_back({best, best_obj});
  return best;
}

namespace {

// Welford accumulation: a degenerate posterior yields exactly zero spread.
struct MomentAccumulator {
  Vec mean;
  Vec m2;
  std::size_t n = 0;

  explicit MomentAccumulator(std::size_t cells) : mean(cells, 0.0), m2(cells, 0.0) {}

  void draw_from(const LaplaceFit& fit, double area, std::size_t draws, numerics::Rng& rng) {
    const std::size_t m = fit.mode.size();
    Vec z(m), f(m);
    const Matrix& l = fit.cov_factor;
    for (std::size_t s = 0; s < draws; ++s) {
      for (auto& v : z) v = rng.normal();
      for (std::size_t i = 0; i < m; ++i) {
        const double* li = l.data().data() + i * m;
        double acc = fit.mode[i];
        for (std::size_t k = 0; k <= i; ++k) acc += li[k] * z[k];
        f[i] = acc;
      }
      const Vec p = softmax(f);
      ++n;
      for (std::size_t i = 0; i < m; ++i) {
        const double dens = p[i] / area;
        const double delta = dens - mean[i];
        mean[i] += delta / static_cast<double>(n);
        m2[i] += delta * (dens - mean[i]);
      }
    }
  }

  DensityMoments finish() {
    DensityMoments out;
    out.stdev.resize(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i)
      out.stdev[i] = std::sqrt(std::max(0.0, m2[i] / static_cast<double>(n - 1)));
    out.mean = std::move(mean);
    return out;
  }
};

}  // namespace

DensityMoments density_moments(const LaplaceFit& fit, const Grid& grid, std::size_t draws,
                               numerics::Rng rng) {
  if (draws < 2) throw InvalidParameter("density_moments: draws must be at least 2");
  if (fit.mode.size() != grid.cell_count())
    throw DimensionMismatch("density_moments: fit does not match grid");
  MomentAccumulator acc(grid.cell_count());
  acc.draw_from(fit, grid.cell_area(), draws, rng);
  return acc.finish();
}

DensityMoments density_moments_mixture(std::span<const LaplaceFit> fits,
                                       std::span<const double> weights, const Grid& grid,
                                       std::size_t draws, numerics::Rng rng) {
  if (fits.empty() || fits.size() != weights.size())
    throw DimensionMismatch("density_moments_mixture: fits/weights mismatch");
  if (draws < 2 * fits.size())
    throw InvalidParameter("density_moments_mixture: too few draws for the mixture");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidParameter("density_moments_mixture: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidParameter("density_moments_mixture: zero weights");

  MomentAccumulator acc(grid.cell_count());
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (fits[k].mode.size() != grid.cell_count())
      throw DimensionMismatch("density_moments_mixture: fit does not match grid");
    const auto share = static_cast<std::size_t>(
        std::llround(static_cast<double>(draws) * weights[k] / total));
    numerics::Rng member = rng.child(k);
    acc.draw_from(fits[k], grid.cell_area(), std::max<std::size_t>(share, 2), member);
  }
  return acc.finish();
}

}  // namespace riskscope::lgp
