#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ldt/action.hpp"
#include "ldt/ou.hpp"

using namespace ldt;

TEST_CASE("deterministic trajectories cost nothing") {
  auto ou = builtin_model("ou1d");
  // Sample the exact flow x(t) = e^{−t}. The discrete action of the exact
  // orbit is pure quadrature residue, O(τ²), so it vanishes under refinement.
  auto action_of_flow = [&](int N) {
    DiscretePath path;
    for (int k = 0; k <= N; ++k) {
      const double t = 2.0 * k / N;
      path.times.push_back(t);
      path.nodes.push_back({std::exp(-t)});
    }
    return path_action(ou, path);
  };
  CHECK(action_of_flow(512) <= 1e-6);
  CHECK(action_of_flow(65536) <= 1e-10);
}

TEST_CASE("straight-line action approaches the closed-form integral") {
  // For the unit-rate model, L along x(s) = s with unit velocity is
  // (1 + s)²/4, whose integral over [0, 1] is 7/12.
  auto ou = builtin_model("ou1d");
  double prev_err = 1e100;
  for (int N : {16, 32, 64, 128}) {
    const auto path = linear_path({0.0}, {1.0}, 1.0, N);
    const double err = std::fabs(path_action(ou, path) - 7.0 / 12.0);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(path_action(ou, linear_path({0.0}, {1.0}, 1.0, 512)) ==
        doctest::Approx(7.0 / 12.0).epsilon(1e-5));
}

TEST_CASE("quadrature error drops fourfold when the step halves") {
  auto ou = builtin_model("ou1d");
  const double exact = 7.0 / 12.0;
  const double e1 = std::fabs(path_action(ou, linear_path({0.0}, {1.0}, 1.0, 64)) - exact);
  const double e2 = std::fabs(path_action(ou, linear_path({0.0}, {1.0}, 1.0, 128)) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("two-point minimization hits the exact kernel exponent") {
  auto ou = builtin_model("ou1d");
  ou::OUParams params{1.0, 1.0};
  for (double T : {0.5, 1.0, 2.0}) {
    const int N = std::max(8, static_cast<int>(std::lround(64 * T)));
    const auto r = minimize_action(ou, {0.0}, {1.0}, T, N);
    REQUIRE(r.converged);
    const double exact = ou::transition_parts(params, 1.0, 1.0, T, 0.0).rate;
    CAPTURE(T);
    CHECK(std::fabs(r.action - exact) / exact <= 0.005);
    CHECK(r.el_residual <= 1e-6);
    // Never worse than the straight-line start.
    CHECK(r.action <= path_action(ou, linear_path({0.0}, {1.0}, T, N)) + 1e-12);
  }
}

TEST_CASE("endpoints on a deterministic orbit cost nothing when the horizon matches") {
  auto ou = builtin_model("ou1d");
  const double T = 0.25;
  const double x1 = std::exp(-T);
  // Resolution chosen so the O(τ²) floor of the discrete functional sits
  // below the tolerance.
  const auto r = minimize_action(ou, {1.0}, {x1}, T, 512);
  CHECK(r.action <= 1e-8);
}

TEST_CASE("minimization rejects undersized problems") {
  auto ou = builtin_model("ou1d");
  CHECK_THROWS_AS(minimize_action(ou, {0.0}, {1.0}, 1.0, 4), InvalidParam);
  CHECK_THROWS_AS(minimize_action(ou, {0.0}, {1.0}, -1.0, 64), InvalidParam);
}

TEST_CASE("action along the horizon schedule is nonincreasing") {
  auto ou = builtin_model("ou1d");
  const auto q = quasipotential(ou, {0.0}, {1.0});
  REQUIRE(q.schedule.size() >= 2);
  for (std::size_t i = 1; i < q.schedule.size(); ++i)
    CHECK(q.schedule[i].second <= q.schedule[i - 1].second + 1e-6);
}

TEST_CASE("ou quasipotential reproduces the stationary rate function") {
  auto ou = builtin_model("ou1d");
  for (double xt : {0.5, 1.0, 2.0}) {
    const auto q = quasipotential(ou, {0.0}, {xt});
    CHECK(std::fabs(q.value - 0.5 * xt * xt) / (0.5 * xt * xt) <= 0.01);
  }
}

TEST_CASE("doublewell barrier from the well to the saddle") {
  auto dw = builtin_model("doublewell1d");
  const auto q = quasipotential(dw, {1.0}, {0.0});
  CHECK(std::fabs(q.value - 0.25) / 0.25 <= 0.02);
}

TEST_CASE("circulation leaves the quasipotential unchanged") {
  auto l2 = builtin_model("linear2d", {{"kappa", 1.0}, {"omega", 2.0}});
  const auto q = quasipotential(l2, {0.0, 0.0}, {1.0, 0.0});
  CHECK(std::fabs(q.value - 0.5) / 0.5 <= 0.02);
}

TEST_CASE("quasipotential symmetry of the symmetric doublewell") {
  auto dw = builtin_model("doublewell1d");
  const auto a = quasipotential(dw, {1.0}, {0.4});
  const auto b = quasipotential(dw, {-1.0}, {-0.4});
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
}

TEST_CASE("quasipotential demands a stable attractor") {
  auto dw = builtin_model("doublewell1d");
  CHECK_THROWS_AS(quasipotential(dw, {0.0}, {1.0}), InvalidParam);   // saddle
  CHECK_THROWS_AS(quasipotential(dw, {0.5}, {1.0}), InvalidParam);   // not a fixed point
}

TEST_CASE("minimizer agrees with the kernel exponent over a grid of endpoints") {
  auto ou = builtin_model("ou1d", {{"b", 1.5}, {"D", 0.5}});
  ou::OUParams params{1.5, 0.5};
  for (double xp : {-0.5, 0.3}) {
    for (double x : {0.8, -1.1}) {
      const auto r = minimize_action(ou, {xp}, {x}, 1.0, 64);
      const double exact = ou::transition_parts(params, 1.0, x, 1.0, xp).rate;
      CHECK(r.action == doctest::Approx(exact).epsilon(0.005));
    }
  }
}
