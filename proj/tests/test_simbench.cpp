// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "riskscope/errors.hpp"
#include "riskscope/simbench.hpp"

using namespace riskscope;
using namespace riskscope::simbench;

namespace {

const stl::FormulaPtr kGoal = stl::parse("F[0,10] (5 - max(abs(35 - y[0]), abs(5 - y[1])) > 0)");
const dlgp::RobustnessLevels kLevels{{-10.0, 0.0}};

}  // namespace

TEST_SUITE_BEGIN("simbench");

TEST_CASE("default world validates and matches the shipped file") {
  const World w = World::benchmark_default();
  w.validate();
  const World parsed = World::from_text(w.to_text());
  CHECK(parsed.to_text() == w.to_text());
  CHECK(parsed.geometry_hash() == w.geometry_hash());

  const auto shipped = std::filesystem::path(RISKSCOPE_SOURCE_DIR) / "data" / "world_v1.txt";
  if (std::filesystem::exists(shipped)) {
    const World from_file = World::load(shipped);
    CHECK(from_file.to_text() == w.to_text());
  }
}

TEST_CASE("world rejects overlapping or non-tiling layouts") {
  World w = World::benchmark_default();
  w.obstacles.push_back({0.0, 5.0, 0.0, 5.0});  // overlaps area A
  CHECK_THROWS_AS(w.validate(), InvalidParameter);

  World gap = World::benchmark_default();
  gap.areas[0].clear();  // removes area A without re-tiling
  CHECK_THROWS_AS(gap.validate(), InvalidParameter);
}

TEST_CASE("area lookup covers the free space") {
  const World w = World::benchmark_default();
  CHECK(w.area_at(5.0, 5.0) == AreaId::A);
  CHECK(w.area_at(22.0, 2.0) == AreaId::C);
  CHECK(w.area_at(12.0, 27.0) == AreaId::E);
  CHECK(!w.area_at(20.0, 15.0).has_value());  // inside the big obstacle
  CHECK(!w.area_at(41.0, 5.0).has_value());

  numerics::Rng rng(2);
  for (int i = 0; i < 20000; ++i) {
    const double x = rng.uniform(0.0, 40.0);
    const double y = rng.uniform(0.0, 40.0);
    if (w.in_obstacle_interior(x, y)) continue;
    CHECK(w.area_at(x, y).has_value());
  }
}

TEST_CASE("input sampler clips to the region") {
  numerics::Rng rng(7);
  SimConfig cfg;
  for (int i = 0; i < 20000; ++i) {
    const auto x = sample_input(rng, cfg);
    CHECK(x[0] >= 0.0);
    CHECK(x[0] <= 10.0);
    CHECK(x[1] >= 0.0);
    CHECK(x[1] <= 10.0);
  }
}

TEST_CASE("input sampler matches an independent oracle") {
  // Oracle: the same clipped mixture sampled with the standard library.
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t n = 1000000;
  double ox = 0.0, oy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = unif(gen) < 0.5;
    const double mx = first ? 1.0 : 5.0, my = first ? 5.0 : 1.0;
    const double vx = first ? 2.0 : 10.0, vy = first ? 10.0 : 2.0;
    ox += std::clamp(mx + std::sqrt(vx) * gauss(gen), 0.0, 10.0);
    oy += std::clamp(my + std::sqrt(vy) * gauss(gen), 0.0, 10.0);
  }
  numerics::Rng rng(99);
  SimConfig cfg;
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = sample_input(rng, cfg);
    sx += x[0];
    sy += x[1];
  }
  CHECK(std::fabs(sx / n - ox / n) < 0.01);
  CHECK(std::fabs(sy / n - oy / n) < 0.01);
}

TEST_CASE("area A at equal coordinates moves up half the time") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  numerics::Rng rng(17);
  int up = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto next = step({4.0, 4.0}, rng, w, cfg);
    if (next[1] > 4.0 + 1e-12) ++up;
  }
  CHECK(std::fabs(static_cast<double>(up) / n - 0.5) < 0.01);
}

TEST_CASE("stay probabilities in areas C and E") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  numerics::Rng rng(19);
  int stay_c = 0, stay_e = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto c_next = step({25.0, 2.5}, rng, w, cfg);
    if (c_next[0] == 25.0 && c_next[1] == 2.5) ++stay_c;
    const auto e_next = step({12.5, 27.5}, rng, w, cfg);
    if (e_next[0] == 12.5 && e_next[1] == 27.5) ++stay_e;
  }
  CHECK(std::fabs(static_cast<double>(stay_c) / n - 0.7) < 0.01);
  CHECK(std::fabs(static_cast<double>(stay_e) / n - 0.1) < 0.01);
}

TEST_CASE("blocked directions are reselected inside the region") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  numerics::Rng rng(23);
  // 0.1 below the top wall in area F, drawn direction is rightward but a
  // position near the right wall forces a reselection.
  for (int i = 0; i < 2000; ++i) {
    const auto next = step({39.95, 39.9}, rng, w, cfg);
    CHECK(w.inside_region(next[0], next[1]));
    CHECK(!w.in_obstacle_interior(next[0], next[1]));
  }
}

TEST_CASE("upward draws just below the top wall stay inside") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  numerics::Rng rng(27);
  // Area D always draws up-right; 0.1 below the top wall every draw is
  // blocked and must be replaced by a feasible direction.
  for (int i = 0; i < 500; ++i) {
    const auto next = step({5.0, 39.9}, rng, w, cfg);
    CHECK(w.inside_region(next[0], next[1]));
    CHECK(!w.in_obstacle_interior(next[0], next[1]));
  }
}

TEST_CASE("step rejects positions off the free space") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  numerics::Rng rng(1);
  CHECK_THROWS_AS(step({20.0, 15.0}, rng, w, cfg), InvalidState);
}

TEST_CASE("area F always moves right when unobstructed") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  numerics::Rng rng(29);
  numerics::Vec pos{16.0, 27.0};
  for (int i = 0; i < 10; ++i) {
    const auto next = step(pos, rng, w, cfg);
    CHECK(next[1] == pos[1]);
    CHECK(next[0] > pos[0]);
    const double d = next[0] - pos[0];
    CHECK(d >= 0.3);
    CHECK(d <= 0.8);
    pos = next;
    if (pos[0] > 28.0) break;
  }
}

TEST_CASE("simulate produces the an aligned 101-sample signal") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  numerics::Rng rng(31);
  const auto y = simulate({3.0, 3.0}, rng, w, cfg);
  CHECK(y.times.size() == 101);
  CHECK(y.values.front() == numerics::Vec{3.0, 3.0});
  CHECK(y.times.back() == doctest::Approx(10.0));
  for (std::size_t i = 1; i < y.values.size(); ++i) {
    const double dx = y.values[i][0] - y.values[i - 1][0];
    const double dy = y.values[i][1] - y.values[i - 1][1];
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d > 1e-12) {
      CHECK(d >= 0.3 - 1e-9);
      CHECK(d <= 0.8 + 1e-9);
    }
  }
}

TEST_CASE("trajectories stay inside the region and clear of obstacles") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  numerics::Rng rng(37);
  for (int run = 0; run < 1000; ++run) {
    numerics::Rng task = rng.child(run);
    const auto x = sample_input(task, cfg);
    const auto y = simulate(x, task, w, cfg);
    for (const auto& v : y.values) {
      CHECK(w.inside_region(v[0], v[1]));
      CHECK(!w.in_obstacle_interior(v[0], v[1]));
    }
  }
}

TEST_CASE("dataset generation is deterministic and partitions the data") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  const auto a = generate_dataset(200, kLevels, *kGoal, numerics::Rng(5), w, cfg);
  const auto b = generate_dataset(200, kLevels, *kGoal, numerics::Rng(5), w, cfg);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.size() == 200);
  std::array<int, 3> hist{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(kLevels.classify(a.rho[i]) == a.labels[i]);
    ++hist[static_cast<std::size_t>(a.labels[i])];
  }
  CHECK(hist[0] + hist[1] + hist[2] == 200);
}

TEST_CASE("dataset csv round trip") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  const auto a = generate_dataset(50, kLevels, *kGoal, numerics::Rng(5), w, cfg);
  const auto back = LabeledDataset::from_csv(a.to_csv());
  CHECK(back.inputs == a.inputs);
  CHECK(back.rho == a.rho);
  CHECK(back.labels == a.labels);
}

TEST_CASE("truth proxy lies on the simplex and flags empty levels") {
  const lgp::Grid grid = lgp::make_grid({0.0, 0.0}, {10.0, 10.0}, 1.0);
  std::vector<numerics::Vec> inputs;
  std::vector<int> labels;
  numerics::Rng rng(3);
  for (int i = 0; i < 3000; ++i) {
    inputs.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
    labels.push_back(i % 3);
  }
  const TruthField field = truth_from_labeled(inputs, labels, 3, 0.5, grid);
  for (const auto& pi : field.pi) {
    double total = 0.0;
    for (double v : pi) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  std::vector<int> missing(labels.size(), 0);  // only level 0 present
  CHECK_THROWS_AS(truth_from_labeled(inputs, missing, 3, 0.5, grid), DegenerateTruth);
}

TEST_CASE("truth proxy recovers a constant probability vector") {
  const lgp::Grid grid = lgp::make_grid({0.0, 0.0}, {10.0, 10.0}, 0.5);
  std::vector<numerics::Vec> inputs;
  std::vector<int> labels;
  numerics::Rng rng(41);
  const numerics::Vec pi{0.2, 0.3, 0.5};
  for (int i = 0; i < 100000; ++i) {
    inputs.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
    const double u = rng.uniform();
    labels.push_back(u < 0.2 ? 0 : (u < 0.5 ? 1 : 2));
  }
  const TruthField field = truth_from_labeled(inputs, labels, 3, 0.5, grid);
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    for (std::size_t l = 0; l < 3; ++l) CHECK(std::fabs(field.pi[c][l] - pi[l]) < 0.05);
}

TEST_CASE("paper proxy configuration runs end to end at reduced scale") {
  const World w = World::benchmark_default();
  SimConfig cfg;
  const lgp::Grid grid = lgp::make_grid({0.0, 0.0}, {10.0, 10.0}, 2.0);
  const TruthField field =
      build_truth_proxy(2000, 0.01, kLevels, *kGoal, numerics::Rng(9), w, cfg, grid);
  CHECK(field.pi.size() == grid.cell_count());
  for (const auto& pi : field.pi) {
    double total = 0.0;
    for (double v : pi) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_SUITE_END();
