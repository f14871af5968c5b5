#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ldt/io.hpp"
#include "ldt/model.hpp"

using namespace ldt;

TEST_CASE("ou1d carries the analytic stationary rate function") {
  auto m = builtin_model("ou1d", {{"b", 1.0}, {"D", 1.0}});
  CHECK(m.dim == 1);
  CHECK(m.drift({1.0})[0] == doctest::Approx(-1.0));
  CHECK(m.phi_ss({1.0}) == doctest::Approx(0.5));
  CHECK(m.circulation({1.3})[0] == 0.0);

  auto m2 = builtin_model("ou1d", {{"b", 2.0}, {"D", 0.5}});
  CHECK(m2.phi_ss({1.0}) == doctest::Approx(2.0));  // b x² / (2D)
}

TEST_CASE("linear2d circulation is orthogonal to the gradient at every node") {
  auto m = builtin_model("linear2d", {{"kappa", 1.0}, {"omega", 2.0}});
  const Vec g = m.circulation({1.0, 0.0});
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(-2.0));

  const Grid grid = default_validation_grid(m, -2.0, 2.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec x = grid.node(i);
    CHECK(std::fabs(dot(m.circulation(x), grad_phi_ss(m, x))) <= 1e-14);
    // b = −D∇φ^ss + γ reproduces the drift exactly.
    const Vec lhs = m.drift(x);
    const Vec rhs = m.circulation(x) - matvec(m.diffusion(x), grad_phi_ss(m, x));
    CHECK(norm_inf(lhs - rhs) <= 1e-14);
  }
}

TEST_CASE("doublewell1d rate function is normalized to zero at the wells") {
  auto m = builtin_model("doublewell1d");
  CHECK(m.phi_ss({1.0}) == doctest::Approx(0.0));
  CHECK(m.phi_ss({-1.0}) == doctest::Approx(0.0));
  CHECK(m.phi_ss({0.0}) == doctest::Approx(0.25));

  // Independent reconstruction: φ^ss = −∫ D⁻¹ b by trapezoid quadrature,
  // shifted to zero at x = 1.
  auto reconstruct = [&](double x) {
    const int n = 20000;
    double acc = 0.0;
    const double a = 1.0;
    const double h = (x - a) / n;
    for (int k = 0; k < n; ++k) {
      const double xl = a + k * h, xr = a + (k + 1) * h;
      acc += -0.5 * h * (m.drift({xl})[0] + m.drift({xr})[0]);
    }
    return acc;
  };
  for (double x : {-1.5, -1.0, -0.3, 0.0, 0.5, 1.7})
    CHECK(m.phi_ss({x}) == doctest::Approx(reconstruct(x)).epsilon(1e-6));
}

TEST_CASE("stationary HJE residual vanishes for every builtin with analytic fields") {
  for (const char* name : {"ou1d", "linear2d", "doublewell1d"}) {
    auto m = builtin_model(name, name == std::string("linear2d")
                                     ? std::map<std::string, double>{{"kappa", 1.0}, {"omega", 2.0}}
                                     : std::map<std::string, double>{});
    const Grid grid = default_validation_grid(m, -2.0, 2.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec x = grid.node(i);
      const Vec g = grad_phi_ss(m, x);
      worst = std::max(worst, std::fabs(dot(g, matvec(m.diffusion(x), g) + m.drift(x))));
    }
    CAPTURE(name);
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("builtin_model is a pure function of name and params") {
  auto a = builtin_model("ou1d", {{"b", 1.3}, {"D", 0.7}});
  auto b = builtin_model("ou1d", {{"b", 1.3}, {"D", 0.7}});
  for (double x : {-2.0, -0.5, 0.0, 1.1, 2.7}) {
    CHECK(a.drift({x})[0] == b.drift({x})[0]);
    CHECK(a.phi_ss({x}) == b.phi_ss({x}));
    CHECK(a.diffusion({x})(0, 0) == b.diffusion({x})(0, 0));
  }
}

TEST_CASE("unknown names and bad parameters are rejected") {
  CHECK_THROWS_AS(builtin_model("ou3d"), UnknownModel);
  CHECK_THROWS_AS(builtin_model("ou1d", {{"b", -1.0}}), InvalidParam);
  CHECK_THROWS_AS(builtin_model("ou1d", {{"b", 0.0}}), InvalidParam);
  CHECK_THROWS_AS(builtin_model("ou1d", {{"mystery", 1.0}}), InvalidParam);
  CHECK_THROWS_AS(builtin_model("linear2d", {{"kappa", -0.1}}), InvalidParam);
  CHECK_THROWS_AS(builtin_model("custom"), InvalidParam);
}

TEST_CASE("validation passes builtins and reports margins") {
  auto m = builtin_model("ou1d");
  const auto report = validate_model(m, default_validation_grid(m));
  CHECK(report.pass);
  CHECK(report.spd_margin == doctest::Approx(1.0));
  CHECK(report.max_asymmetry == 0.0);
  REQUIRE(report.decomposition_residual.has_value());
  CHECK(*report.decomposition_residual <= 1e-12);

  auto l2 = builtin_model("linear2d", {{"kappa", 1.0}, {"omega", 2.0}});
  const auto r2 = validate_model(l2, default_validation_grid(l2, -2.0, 2.0));
  CHECK(r2.pass);
  REQUIRE(r2.decomposition_residual.has_value());
  CHECK(*r2.decomposition_residual <= 1e-12);
}

TEST_CASE("degenerate diffusion is caught on the validation grid") {
  // D(x) = x² has a zero eigenvalue wherever the grid contains x = 0.
  auto m = custom_model(1, {"-x1"}, {{"x1^2"}});
  const Grid grid = Grid::uniform({-1.0}, {1.0}, {5});  // node at 0 (odd count)
  CHECK_THROWS_AS(validate_model(m, grid), DegenerateDiffusion);
}

TEST_CASE("custom models evaluate expression drift and diffusion") {
  auto m = custom_model(2, {"-a*x1 + x2", "-x1 - a*x2"}, {{"1", "0"}, {"0", "1"}}, {{"a", 0.5}});
  const Vec b = m.drift({1.0, 2.0});
  CHECK(b[0] == doctest::Approx(1.5));
  CHECK(b[1] == doctest::Approx(-2.0));
  CHECK(m.diffusion({0.3, 0.4})(0, 1) == 0.0);
  const auto report = validate_model(m, default_validation_grid(m, -1.0, 1.0));
  CHECK(report.pass);
}

TEST_CASE("model config keys build the same model as the direct call") {
  const auto cfg = io::parse_config_text(
      "model.name = custom\n"
      "model.dim = 1\n"
      "model.drift_expr.1 = x1 - x1^3\n"
      "model.diffusion_expr.1.1 = 1\n");
  CHECK(cfg.at("model.name") == "custom");
  auto m = custom_model(1, {cfg.at("model.drift_expr.1")}, {{cfg.at("model.diffusion_expr.1.1")}});
  auto dw = builtin_model("doublewell1d");
  for (double x : {-1.2, 0.0, 0.4, 1.9})
    CHECK(m.drift({x})[0] == doctest::Approx(dw.drift({x})[0]));
}

TEST_CASE("finite-difference jacobian fallback agrees with analytic jacobians") {
  auto dw = builtin_model("doublewell1d");
  ModelSpec bare = dw;
  bare.drift_jacobian = nullptr;
  for (double x : {-1.5, -0.2, 0.9}) {
    CHECK(drift_jacobian(bare, {x})(0, 0) ==
          doctest::Approx(drift_jacobian(dw, {x})(0, 0)).epsilon(1e-8));
  }
}
