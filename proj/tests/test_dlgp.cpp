// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "riskscope/dlgp.hpp"
#include "riskscope/errors.hpp"
#include "riskscope/model_io.hpp"
#include "riskscope/simbench.hpp"
#include "riskscope/special.hpp"

using namespace riskscope;
using namespace riskscope::dlgp;

namespace {

const dlgp::RobustnessLevels kLevels{{-10.0, 0.0}};

// Single-cell model with hand-set density moments for arithmetic checks.
DlgpModel hand_model(double p_mean, double p_std, std::size_t count,
                     const numerics::Vec& alpha_prior) {
  DlgpModel m;
  m.grid = lgp::make_grid({0.0, 0.0}, {1.0, 1.0}, 1.0);
  m.levels = kLevels;
  m.alpha_prior = alpha_prior;
  m.lambda = 0.0;
  for (int l = 0; l < 3; ++l) {
    lgp::LgpPosterior post;
    post.fit.mode = {0.0};
    post.fit.cov_factor = numerics::Matrix(1, 1, 0.0);
    post.fit.count = count;
    post.density.mean = {p_mean};
    post.density.stdev = {p_std};
    m.level_posteriors.push_back(std::move(post));
    m.empty_levels.push_back(count == 0);
  }
  return m;
}

DlgpModel benchmark_fit(std::size_t n, std::optional<double> lambda_fixed, std::uint64_t seed) {
  const auto world = simbench::World::benchmark_default();
  const simbench::SimConfig sim;
  const auto phi = stl::parse("F[0,10] (5 - max(abs(35 - y[0]), abs(5 - y[1])) > 0)");
  const auto data = simbench::generate_dataset(n, kLevels, *phi, numerics::Rng(7), world, sim);
  DlgpConfig cfg;
  cfg.grid_width = 1.0;
  cfg.lambda_fixed = lambda_fixed;
  cfg.seed = seed;
  cfg.hyper_search = {.points = 9, .refine_rounds = 1, .refine_points = 3};
  return fit(data, kLevels, {0.0, 0.0}, {10.0, 10.0}, cfg);
}

}  // namespace

TEST_SUITE_BEGIN("dlgp");

TEST_CASE("classification follows the right-closed convention") {
  CHECK(kLevels.classify(-10.0) == 0);
  CHECK(kLevels.classify(-10.0001) == 0);
  CHECK(kLevels.classify(0.0) == 1);
  CHECK(kLevels.classify(0.001) == 2);
  CHECK_THROWS_AS(kLevels.classify(std::nan("")), NonFinite);
  const RobustnessLevels bad{{0.0, 0.0}};
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("gamma prior from mode and variance") {
  const LambdaPrior p = LambdaPrior::from_mode_variance(2.0, 3.0);
  CHECK(p.shape == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(p.scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.mode() == doctest::Approx(2.0));
  CHECK(p.log_density(0.0) == -std::numeric_limits<double>::infinity());
  // Density integrates to one over a wide numeric grid.
  double total = 0.0;
  for (int i = 0; i < 40000; ++i) {
    const double x = (i + 0.5) * 1e-3;
    total += std::exp(p.log_density(x)) * 1e-3;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("pseudo count arithmetic") {
  const DlgpModel m = hand_model(0.02, 0.005, 10, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const numerics::Vec x{0.5, 0.5};
  CHECK(m.pseudo_count(x, 1.0, 0) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(m.pseudo_count(x, 0.0, 0) == doctest::Approx(0.2).epsilon(1e-12));

  const DlgpModel clamped = hand_model(0.001, 0.01, 10, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(clamped.pseudo_count(x, 1.0, 0) == 0.0);
  CHECK_THROWS_AS(m.pseudo_count(numerics::Vec{2.0, 0.5}, 1.0, 0), OutOfRegion);
}

TEST_CASE("posterior parameters reduce to the prior without pseudo counts") {
  const DlgpModel m = hand_model(0.0, 0.0, 0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto params = m.posterior_params(numerics::Vec{0.5, 0.5}, 1.0);
  for (double a : params.alpha) CHECK(a == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("prior-only query: uniform mean and a near-unit band") {
  const DlgpModel m = hand_model(0.0, 0.0, 0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto q = m.query(numerics::Vec{0.5, 0.5}, 0.05);
  for (double v : q.mean) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(q.band > 0.9);
  const double lo = numerics::beta_quantile(1.0 / 3, 2.0 / 3, 0.025);
  const double hi = numerics::beta_quantile(1.0 / 3, 2.0 / 3, 0.975);
  CHECK(q.band == doctest::Approx(hi - lo).epsilon(1e-9));
}

TEST_CASE("band concentrates when counts scale up") {
  const DlgpModel small = hand_model(0.1, 0.0, 10, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const DlgpModel big = hand_model(0.1, 0.0, 100, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const numerics::Vec x{0.5, 0.5};
  CHECK(big.query(x, 0.05).band < small.query(x, 0.05).band);
}

TEST_CASE("pseudo count is non-increasing and band non-decreasing in lambda") {
  const DlgpModel m = hand_model(0.05, 0.01, 20, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const numerics::Vec x{0.5, 0.5};
  double prev_count = 1e300, prev_band = -1.0;
  for (double lam = 0.0; lam <= 8.0; lam += 0.5) {
    const double pc = m.pseudo_count(x, lam, 0);
    CHECK(pc <= prev_count + 1e-12);
    prev_count = pc;
    auto params = m.posterior_params(x, lam);
    const auto q = dirichlet_query(params, 0.05);
    CHECK(q.band >= prev_band - 1e-9);
    prev_band = q.band;
  }
}

TEST_CASE("zero lambda and zero prior recover the density-ratio mean") {
  DlgpModel m = hand_model(0.0, 0.0, 0, {0.0, 0.0, 0.0});
  numerics::Vec means{0.04, 0.01, 0.15};
  std::vector<std::size_t> counts{40, 10, 50};
  for (int l = 0; l < 3; ++l) {
    m.level_posteriors[l].density.mean = {means[l]};
    m.level_posteriors[l].density.stdev = {0.0};
    m.level_posteriors[l].fit.count = counts[l];
  }
  const auto params = m.posterior_params(numerics::Vec{0.5, 0.5}, 0.0);
  const auto mean = dirichlet::mean(params);
  double denom = 0.0;
  for (int l = 0; l < 3; ++l) denom += counts[l] * means[l];
  for (int l = 0; l < 3; ++l)
    CHECK(mean[l] == doctest::Approx(counts[l] * means[l] / denom).epsilon(1e-12));
}

TEST_CASE("lambda objective uses the dirichlet mean identity and the prior") {
  const DlgpModel m = hand_model(0.05, 0.01, 20, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  simbench::LabeledDataset data;
  data.inputs = {{0.5, 0.5}, {0.2, 0.8}};
  data.rho = {-12.0, 1.0};
  data.labels = {0, 2};
  const LambdaPrior prior = LambdaPrior::from_mode_variance(2.0, 3.0);
  const double lam = 0.7;
  double expected = prior.log_density(lam);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto params = m.posterior_params(data.inputs[i], lam);
    expected += std::log(dirichlet::mean(params)[static_cast<std::size_t>(data.labels[i])]);
  }
  CHECK(lambda_objective(m, data, lam, prior) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("empty data maximizes the objective at the prior mode") {
  const DlgpModel m = hand_model(0.05, 0.01, 20, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const simbench::LabeledDataset empty;
  const LambdaPrior prior = LambdaPrior::from_mode_variance(2.0, 3.0);
  const double best = numerics::maximize_1d(
      [&](double lam) { return lambda_objective(m, empty, lam, prior); }, 0.0, 10.0, 1e-9);
  CHECK(best == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("fit produces one posterior per level and a reproducible artifact") {
  const DlgpModel a = benchmark_fit(150, 1.0, 11);
  CHECK(a.level_posteriors.size() == 3);
  const DlgpModel b = benchmark_fit(150, 1.0, 11);
  CHECK(io::model_to_json(a) == io::model_to_json(b));
  const DlgpModel c = benchmark_fit(150, 1.0, 12);  // different moment seed
  CHECK(io::model_to_json(a) != io::model_to_json(c));
}

TEST_CASE("queried means lie on the simplex everywhere") {
  const DlgpModel m = benchmark_fit(150, std::nullopt, 3);
  CHECK(m.lambda_optimized);
  for (std::size_t c = 0; c < m.grid.cell_count(); ++c) {
    const auto q = m.query(m.grid.center(c), 0.05);
    double total = 0.0;
    for (double v : q.mean) total += v;
    CHECK(std::fabs(total - 1.0) < 1e-12);
    for (std::size_t l = 0; l < 3; ++l) {
      CHECK(q.bounds[l].first <= q.mean[l] + 1e-9);
      CHECK(q.bounds[l].second >= q.mean[l] - 1e-9);
    }
  }
}

TEST_CASE("conservative model widens bands on no-sample cells") {
  const auto world = simbench::World::benchmark_default();
  const simbench::SimConfig sim;
  const auto phi = stl::parse("F[0,10] (5 - max(abs(35 - y[0]), abs(5 - y[1])) > 0)");
  const auto data = simbench::generate_dataset(150, kLevels, *phi, numerics::Rng(7), world, sim);
  const lgp::Grid grid = lgp::make_grid({0.0, 0.0}, {10.0, 10.0}, 1.0);
  const auto counts = lgp::bin_counts(grid, data, 3);
  lgp::HyperSearch search{.points = 9, .refine_rounds = 1, .refine_points = 3};
  auto fits = fit_level_posteriors(grid, counts, {}, search, 8);

  DlgpConfig cfg;
  cfg.grid_width = 1.0;
  cfg.seed = 21;
  cfg.lambda_fixed = 0.0;
  const DlgpModel zero = assemble_model(fits, grid, kLevels, data, cfg);
  cfg.lambda_fixed = 1.5;
  const DlgpModel cons = assemble_model(std::move(fits), grid, kLevels, data, cfg);

  std::vector<bool> occupied(grid.cell_count(), false);
  for (const auto& x : data.inputs) occupied[grid.cell_index(x)] = true;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (occupied[c]) continue;
    const auto qz = zero.query(grid.center(c), 0.05);
    const auto qc = cons.query(grid.center(c), 0.05);
    CHECK(qc.band >= qz.band - 1e-9);
  }
}

TEST_CASE("unknown model schemas are rejected") {
  CHECK_THROWS_AS(io::model_from_json("{\"schema\":\"riskscope.model.v999\"}"), IoError);
  CHECK_THROWS_AS(io::model_from_json("not json"), IoError);
}

TEST_CASE("heavily sampled cells agree with the truth proxy") {
  const auto world = simbench::World::benchmark_default();
  const simbench::SimConfig sim;
  const auto phi = stl::parse("F[0,10] (5 - max(abs(35 - y[0]), abs(5 - y[1])) > 0)");
  const auto data = simbench::generate_dataset(8000, kLevels, *phi, numerics::Rng(81), world, sim);
  DlgpConfig cfg;
  cfg.grid_width = 1.0;
  cfg.seed = 82;
  cfg.hyper_search = {.points = 9, .refine_rounds = 1, .refine_points = 3};
  const DlgpModel model = fit(data, kLevels, {0.0, 0.0}, {10.0, 10.0}, cfg);
  const auto truth = simbench::build_truth_proxy(100000, 0.25, kLevels, *phi, numerics::Rng(83),
                                                 world, sim, model.grid);
  const auto counts = lgp::bin_counts(model.grid, data, 3);
  // Interior cells only: the clipped sampler piles mass on the region edge,
  // where a center-evaluated kernel and cell-averaged counts measure
  // different quantities.
  std::size_t heavy_cell = 0, heavy_count = 0;
  for (std::size_t c = 0; c < model.grid.cell_count(); ++c) {
    const auto centre = model.grid.center(c);
    if (centre[0] < 1.0 || centre[0] > 9.0 || centre[1] < 1.0 || centre[1] > 9.0) continue;
    std::size_t total = 0;
    for (int l = 0; l < 3; ++l) total += counts.per_level[static_cast<std::size_t>(l)][c];
    if (total > heavy_count) {
      heavy_count = total;
      heavy_cell = c;
    }
  }
  CHECK(heavy_count > 80);
  const auto mean = dirichlet::mean(model.posterior_params(model.grid.center(heavy_cell)));
  for (std::size_t l = 0; l < 3; ++l) {
    INFO("level ", l, ": model ", mean[l], " truth ", truth.pi[heavy_cell][l]);
    CHECK(std::fabs(mean[l] - truth.pi[heavy_cell][l]) < 0.05);
  }
}

TEST_CASE("model json round trip preserves queries") {
  const DlgpModel m = benchmark_fit(120, 0.8, 5);
  const io::AnyModel loaded = io::model_from_json(io::model_to_json(m));
  const auto* back = std::get_if<DlgpModel>(&loaded);
  REQUIRE(back != nullptr);
  const numerics::Vec x{3.3, 7.7};
  const auto qa = m.query(x, 0.05);
  const auto qb = back->query(x, 0.05);
  CHECK(qa.mean == qb.mean);
  CHECK(qa.band == qb.band);
  CHECK(io::model_to_json(*back) == io::model_to_json(m));
}

TEST_SUITE_END();
