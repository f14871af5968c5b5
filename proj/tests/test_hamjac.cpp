#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ldt/hamjac.hpp"
#include "ldt/rng.hpp"

using namespace ldt;

TEST_CASE("hamiltonian values at hand-checked points") {
  auto ou = builtin_model("ou1d");
  CHECK(hamiltonian(ou, {{1.0}, {1.0}}) == doctest::Approx(0.0));  // D y² − b x y
  CHECK(hamiltonian(ou, {{0.5}, {0.0}}) == 0.0);

  auto l2 = builtin_model("linear2d", {{"kappa", 1.0}, {"omega", 2.0}});
  CHECK(hamiltonian(l2, {{1.0, 0.0}, {0.0, 1.0}}) == doctest::Approx(-1.0));
}

TEST_CASE("lagrangian values and momentum map") {
  auto ou = builtin_model("ou1d");
  const auto r = lagrangian(ou, {0.0}, {2.0});
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(r.momentum[0] == doctest::Approx(1.0));
  // On the deterministic flow the cost and the momentum vanish.
  const auto on_flow = lagrangian(ou, {0.7}, ou.drift({0.7}));
  CHECK(on_flow.value == doctest::Approx(0.0));
  CHECK(std::fabs(on_flow.momentum[0]) <= 1e-15);
}

TEST_CASE("legendre identity L = ẋᵀy − H holds on random samples") {
  auto l2 = builtin_model("linear2d", {{"kappa", 0.7}, {"omega", 1.3}});
  CounterRng rng(31, 0);
  for (int k = 0; k < 10000; ++k) {
    const Vec x{-2.0 + 4.0 * rng.uniform(), -2.0 + 4.0 * rng.uniform()};
    const Vec v{-3.0 + 6.0 * rng.uniform(), -3.0 + 6.0 * rng.uniform()};
    const auto r = lagrangian(l2, x, v);
    const double h = hamiltonian(l2, {x, r.momentum});
    CHECK(std::fabs(r.value - (dot(v, r.momentum) - h)) <= 1e-12);
  }
}

TEST_CASE("legendre round trip is the identity") {
  auto dw = builtin_model("doublewell1d");
  CounterRng rng(77, 0);
  for (int k = 0; k < 1000; ++k) {
    const Vec x{-2.0 + 4.0 * rng.uniform()};
    const Vec v{-3.0 + 6.0 * rng.uniform()};
    const auto r = lagrangian(dw, x, v);
    // ẋ = 2Dy + b must reproduce v.
    const double back = 2.0 * dw.diffusion(x)(0, 0) * r.momentum[0] + dw.drift(x)[0];
    CHECK(back == doctest::Approx(v[0]).epsilon(1e-12));
  }
}

TEST_CASE("zero initial momentum contracts to the deterministic flow") {
  auto ou = builtin_model("ou1d");
  const auto traj = integrate_hamiltonian(ou, {{1.0}, {0.0}}, 2.0, 1e-3);
  CHECK(traj.energy_drift <= 1e-12);
  for (std::size_t k = 0; k < traj.times.size(); k += 200) {
    CHECK(traj.states[k].y[0] == 0.0);
    CHECK(traj.states[k].x[0] == doctest::Approx(std::exp(-traj.times[k])).epsilon(1e-9));
  }
}

TEST_CASE("momentum grows exponentially along the conservative flow") {
  auto ou = builtin_model("ou1d");
  const auto traj = integrate_hamiltonian(ou, {{0.0}, {1.0}}, 2.0, 1e-3);
  CHECK(traj.energy_drift <= 1e-8);
  const auto last = traj.times.size() - 1;
  CHECK(traj.states[last].y[0] == doctest::Approx(std::exp(2.0)).epsilon(1e-6));
}

TEST_CASE("the gradient manifold y = ∇φ^ss carries the time-reversed flow") {
  auto ou = builtin_model("ou1d");
  const double x0 = 0.2;
  const auto traj = integrate_hamiltonian(ou, {{x0}, {x0}}, 1.5, 1e-3);  // y = b x / D = x
  for (std::size_t k = 0; k < traj.times.size(); k += 300)
    CHECK(traj.states[k].x[0] == doctest::Approx(x0 * std::exp(traj.times[k])).epsilon(1e-7));
}

TEST_CASE("energy drift shrinks at fourth order or better") {
  auto l2 = builtin_model("linear2d", {{"kappa", 1.0}, {"omega", 2.0}});
  const PhaseState s0{{1.0, 0.0}, {0.3, -0.2}};
  const double d1 = integrate_hamiltonian(l2, s0, 2.0, 0.04).energy_drift;
  const double d2 = integrate_hamiltonian(l2, s0, 2.0, 0.02).energy_drift;
  CHECK(d1 / d2 >= 8.0);
}

TEST_CASE("canonical transform: potential, evenness, flow equivalence") {
  auto ou = builtin_model("ou1d", {{"b", 1.5}, {"D", 0.5}});
  const auto cf = canonical_transform(ou);
  // V(q) = −b² q² / (4D)
  for (double q : {-1.0, 0.3, 2.0})
    CHECK(cf.potential({q}) == doctest::Approx(-1.5 * 1.5 * q * q / (4.0 * 0.5)));

  CounterRng rng(5, 0);
  for (int k = 0; k < 1000; ++k) {
    const Vec q{-2.0 + 4.0 * rng.uniform()};
    const Vec p{-2.0 + 4.0 * rng.uniform()};
    const Vec pneg{-p[0]};
    CHECK(canonical_hamiltonian(ou, cf, q, p) == canonical_hamiltonian(ou, cf, q, pneg));
    // H̃(x, y − ½∇φ^eq) = H(x, y)
    const Vec y{-2.0 + 4.0 * rng.uniform()};
    const Vec shifted{y[0] - cf.momentum_shift(q)[0]};
    CHECK(canonical_hamiltonian(ou, cf, q, shifted) ==
          doctest::Approx(hamiltonian(ou, {q, y})).epsilon(1e-10));
  }
}

TEST_CASE("canonical flow maps onto the original flow") {
  auto dw = builtin_model("doublewell1d");
  const auto cf = canonical_transform(dw);
  const PhaseState s0{{0.3}, {0.4}};
  const auto direct = integrate_hamiltonian(dw, s0, 1.0, 1e-3);
  const PhaseState qp0{{0.3}, {0.4 - cf.momentum_shift({0.3})[0]}};
  const auto canonical = integrate_canonical(dw, cf, qp0, 1.0, 1e-3);
  double worst = 0.0;
  for (std::size_t k = 0; k < direct.times.size(); ++k) {
    const double y_mapped =
        canonical.states[k].y[0] + cf.momentum_shift(canonical.states[k].x)[0];
    worst = std::max({worst, std::fabs(direct.states[k].x[0] - canonical.states[k].x[0]),
                      std::fabs(direct.states[k].y[0] - y_mapped)});
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("models with circulation are rejected by the canonical transform") {
  auto l2 = builtin_model("linear2d", {{"kappa", 1.0}, {"omega", 2.0}});
  CHECK_THROWS_AS(canonical_transform(l2), NotDetailedBalance);
}

TEST_CASE("magnetic-like force terms do no work") {
  auto l2 = builtin_model("linear2d", {{"kappa", 1.0}, {"omega", 2.0}});
  CounterRng rng(13, 0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec x{-2.0 + 4.0 * rng.uniform(), -2.0 + 4.0 * rng.uniform()};
    const Vec v{-2.0 + 4.0 * rng.uniform(), -2.0 + 4.0 * rng.uniform()};
    worst = std::max(worst, std::fabs(lorentz_power(l2, x, v).lorentz_power));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("gradient models have vanishing first magnetic term in one dimension") {
  auto dw = builtin_model("doublewell1d");
  // In one dimension both antisymmetric pairings cancel identically.
  for (double x : {-1.2, 0.1, 0.8})
    for (double v : {-2.0, 0.5, 3.0})
      CHECK(std::fabs(lorentz_power(dw, {x}, {v}).lorentz_power) <= 1e-14);
}

TEST_CASE("hje residual of the analytic rate function is zero on the grid") {
  auto l2 = builtin_model("linear2d", {{"kappa", 1.0}, {"omega", 2.0}});
  const Grid grid = Grid::uniform({-2.0, -2.0}, {2.0, 2.0}, {41, 41});
  ScalarField phi{grid, {}, {}};
  phi.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec x = grid.node(i);
    phi.values[i] = 0.5 * (x[0] * x[0] + x[1] * x[1]);
  }
  const auto resid = hje_residual(l2, phi);
  // Quadratic fields differentiate exactly under both stencils.
  for (double r : resid.values) CHECK(std::fabs(r) <= 1e-12);
}

TEST_CASE("hje residual is identically zero for a constant field") {
  auto ou = builtin_model("ou1d");
  const Grid grid = Grid::uniform({-2.0}, {2.0}, {31});
  ScalarField phi{grid, std::vector<double>(grid.size(), 0.0), {}};
  const auto resid = hje_residual(ou, phi);
  for (double r : resid.values) CHECK(r == 0.0);
}

TEST_CASE("time-dependent hje residual includes the supplied derivative field") {
  auto ou = builtin_model("ou1d");
  const Grid grid = Grid::uniform({-2.0}, {2.0}, {31});
  ScalarField phi{grid, {}, {}}, dphi{grid, {}, {}};
  phi.values.resize(grid.size());
  dphi.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i)[0];
    phi.values[i] = 0.5 * x * x;
    // Stationary residual is zero, so with ∂φ/∂t = c the residual must be c.
    dphi.values[i] = 0.25;
  }
  const auto resid = hje_residual(ou, phi, &dphi);
  for (double r : resid.values) CHECK(r == doctest::Approx(0.25).epsilon(1e-12));
}
