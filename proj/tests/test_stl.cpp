// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "riskscope/errors.hpp"
#include "riskscope/rng.hpp"
#include "riskscope/stl.hpp"

using namespace riskscope;
using stl::Formula;
using stl::FormulaPtr;
using stl::NodeKind;
using stl::Signal;

namespace {

const char* kGoalFormula = "F[0,10] (5 - max(abs(35 - y[0]), abs(5 - y[1])) > 0)";

Signal constant_signal(double x0, double x1, double horizon = 10.0, double dt = 0.1) {
  Signal s;
  const auto n = static_cast<std::size_t>(std::round(horizon / dt));
  for (std::size_t i = 0; i <= n; ++i) {
    s.times.push_back(static_cast<double>(i) * dt);
    s.values.push_back({x0, x1});
  }
  return s;
}

Signal linear_signal(double x0a, double x1a, double x0b, double x1b) {
  Signal s;
  for (std::size_t i = 0; i <= 100; ++i) {
    const double u = static_cast<double>(i) / 100.0;
    s.times.push_back(static_cast<double>(i) * 0.1);
    s.values.push_back({x0a + u * (x0b - x0a), x1a + u * (x1b - x1a)});
  }
  return s;
}

// Random formula over 2-d signals. The time budget caps the summed window
// ends, so evaluation at t = 0 never runs off a signal of that length.
FormulaPtr random_formula(numerics::Rng& rng, int depth, double budget = 6.0) {
  const auto r = rng.uniform();
  if (depth <= 0 || r < 0.35) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.3f * y[%d] + %.3f %c %.3f", rng.uniform(-2.0, 2.0),
                  rng.uniform() < 0.5 ? 0 : 1, rng.uniform(-3.0, 3.0),
                  rng.uniform() < 0.5 ? '<' : '>', rng.uniform(-3.0, 3.0));
    return stl::parse(buf);
  }
  // Window edges snap to the 0.25 s sample step so windows are never empty.
  const double lo = 0.25 * std::floor(rng.uniform(0.0, budget / 2.0) / 0.25);
  const double hi = lo + 0.25 * std::floor(rng.uniform(0.0, budget / 2.0) / 0.25);
  const auto a = random_formula(rng, depth - 1, budget - hi);
  const auto b = random_formula(rng, depth - 1, budget - hi);
  Formula f;
  if (r < 0.45) {
    f = {.kind = NodeKind::Not, .left = a};
  } else if (r < 0.6) {
    f = {.kind = NodeKind::And, .left = a, .right = b};
  } else if (r < 0.75) {
    f = {.kind = NodeKind::Or, .left = a, .right = b};
  } else if (r < 0.85) {
    f = {.kind = NodeKind::Eventually, .t_lo = lo, .t_hi = hi, .left = a};
  } else if (r < 0.95) {
    f = {.kind = NodeKind::Always, .t_lo = lo, .t_hi = hi, .left = a};
  } else {
    f = {.kind = NodeKind::Until, .t_lo = lo, .t_hi = hi, .left = a, .right = b};
  }
  return std::make_shared<const Formula>(std::move(f));
}

Signal random_signal(numerics::Rng& rng) {
  Signal s;
  const int n = 40 + static_cast<int>(rng.uniform(0.0, 40.0));
  double x0 = rng.uniform(-2.0, 2.0);
  double x1 = rng.uniform(-2.0, 2.0);
  for (int i = 0; i <= n; ++i) {
    s.times.push_back(static_cast<double>(i) * 0.25);
    s.values.push_back({x0, x1});
    x0 += rng.uniform(-0.3, 0.3);
    x1 += rng.uniform(-0.3, 0.3);
  }
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("stl");

TEST_CASE("parse produces the expected node shapes") {
  const auto phi = stl::parse(kGoalFormula);
  CHECK(phi->kind == NodeKind::Eventually);
  CHECK(phi->t_lo == 0.0);
  CHECK(phi->t_hi == 10.0);
  CHECK(phi->left->kind == NodeKind::Pred);

  const auto psi = stl::parse("G[0,2] (y[0] < 1) & F[0,2] (y[1] > 0)");
  CHECK(psi->kind == NodeKind::And);
  CHECK(psi->left->kind == NodeKind::Always);
  CHECK(psi->right->kind == NodeKind::Eventually);
}

TEST_CASE("parse rejects a reversed interval") {
  CHECK_THROWS_AS(stl::parse("F[2,1] (y[0] > 0)"), SyntaxError);
}

TEST_CASE("parse reports positions") {
  try {
    stl::parse("F[0,1] (y[0] >)");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.position > 0);
  }
}

TEST_CASE("pretty print reparses to an equal tree") {
  numerics::Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const auto phi = random_formula(rng, 3);
    const auto again = stl::parse(stl::to_string(*phi));
    CHECK(stl::equal(*phi, *again));
  }
}

TEST_CASE("goal robustness on constant trajectories") {
  const auto phi = stl::parse(kGoalFormula);
  CHECK(stl::robustness(*phi, constant_signal(35.0, 5.0), 0.0) == 5.0);
  CHECK(stl::robustness(*phi, constant_signal(30.0, 5.0), 0.0) == 0.0);
}

TEST_CASE("goal robustness matches per-sample brute force") {
  const auto phi = stl::parse(kGoalFormula);
  const Signal y = linear_signal(0.0, 0.0, 40.0, 10.0);
  const double oracle = oracles::brute_goal_robustness(y.values);
  CHECK(stl::robustness(*phi, y, 0.0) == oracle);
}

TEST_CASE("unbound coordinate detected at evaluation") {
  const auto phi = stl::parse("y[7] > 0");
  CHECK_THROWS_AS(stl::robustness(*phi, constant_signal(0.0, 0.0), 0.0), UnboundCoordinate);
}

TEST_CASE("empty window raises") {
  const auto phi = stl::parse("F[20,30] (y[0] > 0)");
  CHECK_THROWS_AS(stl::robustness(*phi, constant_signal(0.0, 0.0), 0.0), EmptyWindow);
}

TEST_CASE("negation conjunction disjunction identities") {
  numerics::Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_formula(rng, 2);
    const auto b = random_formula(rng, 2);
    const Signal y = random_signal(rng);

    Formula neg{.kind = NodeKind::Not, .left = a};
    CHECK(stl::robustness(neg, y, 0.0) == -stl::robustness(*a, y, 0.0));

    Formula conj{.kind = NodeKind::And, .left = a, .right = b};
    Formula disj{.kind = NodeKind::Or, .left = a, .right = b};
    const double ra = stl::robustness(*a, y, 0.0);
    const double rb = stl::robustness(*b, y, 0.0);
    CHECK(stl::robustness(conj, y, 0.0) == std::min(ra, rb));
    CHECK(stl::robustness(disj, y, 0.0) == std::max(ra, rb));
  }
}

TEST_CASE("eventually equals until with a dominating left operand") {
  // The identity needs the left robustness to exceed every right value; a
  // large-constant predicate plays the role of "true" on bounded signals.
  numerics::Rng rng(47);
  const auto top = stl::parse("1000000 > 0");
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_formula(rng, 2, 4.0);
    const Signal y = random_signal(rng);
    const double lo = 0.25 * std::floor(rng.uniform(0.0, 2.0) / 0.25);
    const double hi = lo + 0.25 * std::floor(rng.uniform(0.0, 3.0) / 0.25);
    Formula ev{.kind = NodeKind::Eventually, .t_lo = lo, .t_hi = hi, .left = a};
    Formula until{.kind = NodeKind::Until, .t_lo = lo, .t_hi = hi, .left = top, .right = a};
    CHECK(stl::robustness(ev, y, 0.0) == stl::robustness(until, y, 0.0));
  }
}

TEST_CASE("tightening a less-than predicate lowers robustness") {
  // Pointwise increase of the left expression decreases "expr < c" robustness.
  const Signal y = constant_signal(2.0, 0.0);
  const double loose = stl::robustness(*stl::parse("y[0] < 5"), y, 0.0);
  const double tight = stl::robustness(*stl::parse("y[0] + 1 < 5"), y, 0.0);
  CHECK(tight < loose);
  CHECK(loose == 3.0);
  CHECK(tight == 2.0);
}

TEST_SUITE_END();
