// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "riskscope/baselines.hpp"
#include "riskscope/errors.hpp"
#include "riskscope/model_io.hpp"

using namespace riskscope;
using namespace riskscope::baselines;

namespace {

const dlgp::RobustnessLevels kLevels{{-10.0, 0.0}};

simbench::LabeledDataset synthetic_dataset(std::size_t n, const numerics::Vec& pi,
                                           std::uint64_t seed) {
  numerics::Rng rng(seed);
  simbench::LabeledDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    d.inputs.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
    const double u = rng.uniform();
    int label = 0;
    double acc = pi[0];
    while (label + 1 < static_cast<int>(pi.size()) && u >= acc) {
      ++label;
      acc += pi[static_cast<std::size_t>(label)];
    }
    d.labels.push_back(label);
    d.rho.push_back(kLevels.representative(label));
  }
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("baselines");

TEST_CASE("scott bandwidths follow the dimension rule") {
  numerics::Rng rng(3);
  std::vector<numerics::Vec> pts;
  for (int i = 0; i < 400; ++i) pts.push_back({rng.normal() * 2.0, rng.normal() * 0.5});
  const auto h = scott_bandwidths(pts);
  const double factor = std::pow(400.0, -1.0 / 6.0);
  CHECK(h[0] == doctest::Approx(factor * oracles::sample_std([&] {
          numerics::Vec xs;
          for (const auto& p : pts) xs.push_back(p[0]);
          return xs;
        }())).epsilon(1e-12));
  CHECK(h[0] > h[1]);

  std::vector<numerics::Vec> degenerate{{1.0, 2.0}, {1.0, 3.0}};
  const auto hd = scott_bandwidths(degenerate);
  CHECK(hd[0] == 1e-3);  // zero spread falls back
  CHECK(hd[1] > 0.0);
}

TEST_CASE("kde at a single point equals the kernel normalizer") {
  const std::vector<numerics::Vec> pts{{1.0, 2.0}};
  const numerics::Vec h{0.5, 0.25};
  const double v = kde_density(pts, h, numerics::Vec{1.0, 2.0});
  CHECK(v == doctest::Approx(1.0 / (2.0 * M_PI * 0.5 * 0.25)).epsilon(1e-12));
}

TEST_CASE("kde integrates to one") {
  const std::vector<numerics::Vec> pts{{0.0, 0.0}, {1.5, -0.5}, {-1.0, 2.0}};
  const numerics::Vec h{0.4, 0.7};
  double total = 0.0;
  const double lo = -8.0, hi = 9.0, step = 0.05;
  for (double x = lo; x < hi; x += step)
    for (double y = lo; y < hi; y += step)
      total += kde_density(pts, h, numerics::Vec{x + step / 2, y + step / 2}) * step * step;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("kde recovers the standard normal density at the origin") {
  numerics::Rng rng(11);
  std::vector<numerics::Vec> pts;
  for (int i = 0; i < 10000; ++i) pts.push_back({rng.normal(), rng.normal()});
  const auto h = scott_bandwidths(pts);
  const double v = kde_density(pts, h, numerics::Vec{0.0, 0.0});
  CHECK(std::fabs(v - 1.0 / (2.0 * M_PI)) < 0.02);
}

TEST_CASE("dkde pseudo counts integrate back to the level totals") {
  // Interior-concentrated data keeps kernel mass inside the region.
  numerics::Rng rng(5);
  simbench::LabeledDataset d;
  for (int i = 0; i < 600; ++i) {
    d.inputs.push_back({5.0 + rng.normal() * 0.8, 5.0 + rng.normal() * 0.8});
    d.labels.push_back(i % 3);
    d.rho.push_back(kLevels.representative(i % 3));
  }
  const DkdeModel m = dkde_fit(d, kLevels, {});
  const lgp::Grid grid = lgp::make_grid({0.0, 0.0}, {10.0, 10.0}, 0.25);
  numerics::Vec integrals(3, 0.0);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto params = m.posterior_params(grid.center(c));
    for (std::size_t l = 0; l < 3; ++l)
      integrals[l] += (params.alpha[l] - m.alpha_prior[l]) * grid.cell_area();
  }
  for (std::size_t l = 0; l < 3; ++l)
    CHECK(integrals[l] == doctest::Approx(200.0).epsilon(0.02));
}

TEST_CASE("dkde pseudo counts are never clamped and queries stay on the simplex") {
  const auto d = synthetic_dataset(300, {0.2, 0.3, 0.5}, 7);
  const DkdeModel m = dkde_fit(d, kLevels, {});
  numerics::Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    const numerics::Vec x{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    const auto params = m.posterior_params(x);
    for (std::size_t l = 0; l < 3; ++l) CHECK(params.alpha[l] >= m.alpha_prior[l]);
    const auto q = m.query(x, 0.05);
    double total = 0.0;
    for (double v : q.mean) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("dkde approaches a constant truth on plentiful data") {
  const auto d = synthetic_dataset(5000, {0.2, 0.3, 0.5}, 13);
  const DkdeModel m = dkde_fit(d, kLevels, {});
  const numerics::Vec pi{0.2, 0.3, 0.5};
  for (double x = 2.0; x <= 8.0; x += 1.5)
    for (double y = 2.0; y <= 8.0; y += 1.5) {
      const auto q = m.query(numerics::Vec{x, y}, 0.05);
      for (std::size_t l = 0; l < 3; ++l) CHECK(std::fabs(q.mean[l] - pi[l]) < 0.1);
    }
}

TEST_CASE("gdp bounds bracket the mean and means stay on the simplex") {
  const auto d = synthetic_dataset(150, {0.25, 0.35, 0.4}, 21);
  GdpConfig cfg;
  cfg.hyper_search = {.points = 7, .refine_rounds = 1, .refine_points = 3};
  const GdpModel m = gdp_fit(d, kLevels, cfg);
  numerics::Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const numerics::Vec x{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    const auto q = m.query(x, 0.05);
    double total = 0.0;
    for (std::size_t l = 0; l < 3; ++l) {
      total += q.mean[l];
      CHECK(q.bounds[l].first <= q.mean[l]);
      CHECK(q.bounds[l].second >= q.mean[l]);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("gdp reverts to a symmetric prior far from data") {
  // All training points near one corner; query the opposite corner.
  numerics::Rng rng(41);
  simbench::LabeledDataset d;
  for (int i = 0; i < 120; ++i) {
    d.inputs.push_back({1.0 + rng.uniform(0.0, 1.0), 1.0 + rng.uniform(0.0, 1.0)});
    d.labels.push_back(i % 3 == 0 ? 0 : 2);
    d.rho.push_back(kLevels.representative(d.labels.back()));
  }
  GdpConfig cfg;
  cfg.hyper_search = {.points = 7, .refine_rounds = 1, .refine_points = 3};
  cfg.draws = 4000;
  GdpModel m = gdp_fit(d, kLevels, cfg);
  const auto [mu, var] = m.latent(numerics::Vec{9.5, 9.5}, 0);
  CHECK(std::fabs(mu) < 0.05 * std::sqrt(var) + 1e-6);
  // A symmetric prior pushforward is exactly uniform in expectation; pin the
  // kernels to a shared value to isolate that contract from fitting noise.
  for (auto& p : m.params) p = {1.0, 2.0};
  m.refresh_factors();
  const auto q = m.query(numerics::Vec{9.5, 9.5}, 0.05);
  for (double v : q.mean) CHECK(std::fabs(v - 1.0 / 3.0) < 0.05);
}

TEST_CASE("gdp queries are reproducible per point") {
  const auto d = synthetic_dataset(100, {0.3, 0.3, 0.4}, 51);
  GdpConfig cfg;
  cfg.hyper_search = {.points = 5, .refine_rounds = 0, .refine_points = 3};
  const GdpModel m = gdp_fit(d, kLevels, cfg);
  const numerics::Vec x{4.2, 6.6};
  const auto qa = m.query(x, 0.05);
  const auto qb = m.query(x, 0.05);
  CHECK(qa.mean == qb.mean);
  CHECK(qa.bounds == qb.bounds);
}

TEST_CASE("gdp json round trip preserves queries") {
  const auto d = synthetic_dataset(80, {0.3, 0.3, 0.4}, 61);
  GdpConfig cfg;
  cfg.hyper_search = {.points = 5, .refine_rounds = 0, .refine_points = 3};
  const GdpModel m = gdp_fit(d, kLevels, cfg);
  const io::AnyModel loaded = io::model_from_json(io::model_to_json(m));
  const auto* back = std::get_if<GdpModel>(&loaded);
  REQUIRE(back != nullptr);
  const numerics::Vec x{2.5, 7.5};
  const auto qa = m.query(x, 0.05);
  const auto qb = back->query(x, 0.05);
  CHECK(qa.mean == qb.mean);
  CHECK(qa.band == qb.band);
}

TEST_CASE("dkde json round trip preserves queries") {
  const auto d = synthetic_dataset(80, {0.3, 0.3, 0.4}, 71);
  const DkdeModel m = dkde_fit(d, kLevels, {});
  const io::AnyModel loaded = io::model_from_json(io::model_to_json(m));
  const auto* back = std::get_if<DkdeModel>(&loaded);
  REQUIRE(back != nullptr);
  const numerics::Vec x{2.5, 7.5};
  CHECK(m.query(x, 0.05).mean == back->query(x, 0.05).mean);
}

TEST_SUITE_END();
