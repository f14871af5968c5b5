#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/expr.hpp"
#include "ldt/grid.hpp"
#include "ldt/linalg.hpp"

namespace ldt {

/// A dynamical model: drift b(x), diffusion D(x), and optional analytic
/// reference fields. Immutable after construction; all callables must be
/// re-entrant so a model can be shared across threads.
struct ModelSpec {
  std::string name;
  int dim = 0;
  std::function<Vec(const Vec&)> drift;
  std::function<Mat(const Vec&)> diffusion;
  std::map<std::string, double> params;

  // Optional analytic references. phi_ss is stored shift-normalized so its
  // minimum over the declared domain is zero.
  std::function<double(const Vec&)> phi_ss;
  std::function<Vec(const Vec&)> grad_phi_ss;
  std::function<Vec(const Vec&)> circulation;

  // Optional analytic derivatives; finite differences are used when absent.
  std::function<Mat(const Vec&)> drift_jacobian;       // J(i,j) = ∂b_i/∂x_j
  std::function<std::vector<Mat>(const Vec&)> diffusion_gradient;  // [k] = ∂D/∂x_k

  bool has_phi_ss() const { return static_cast<bool>(phi_ss); }
  bool has_circulation() const { return static_cast<bool>(circulation); }
};

namespace detail {

inline double fd_step(double scale) { return 1e-5 * std::max(1.0, std::fabs(scale)); }

}  // namespace detail

/// ∂b_i/∂x_j, analytic when the model provides it, else central differences.
inline Mat drift_jacobian(const ModelSpec& m, const Vec& x) {
  if (m.drift_jacobian) return m.drift_jacobian(x);
  Mat J(m.dim);
  for (int j = 0; j < m.dim; ++j) {
    const double h = detail::fd_step(x[static_cast<std::size_t>(j)]);
    Vec xp = x, xm = x;
    xp[static_cast<std::size_t>(j)] += h;
    xm[static_cast<std::size_t>(j)] -= h;
    const Vec bp = m.drift(xp), bm = m.drift(xm);
    for (int i = 0; i < m.dim; ++i)
      J(i, j) = (bp[static_cast<std::size_t>(i)] - bm[static_cast<std::size_t>(i)]) / (2.0 * h);
  }
  return J;
}

/// ∂D/∂x_k for each k, analytic when provided, else central differences.
inline std::vector<Mat> diffusion_gradient(const ModelSpec& m, const Vec& x) {
  if (m.diffusion_gradient) return m.diffusion_gradient(x);
  std::vector<Mat> g;
  g.reserve(static_cast<std::size_t>(m.dim));
  for (int k = 0; k < m.dim; ++k) {
    const double h = detail::fd_step(x[static_cast<std::size_t>(k)]);
    Vec xp = x, xm = x;
    xp[static_cast<std::size_t>(k)] += h;
    xm[static_cast<std::size_t>(k)] -= h;
    const Mat Dp = m.diffusion(xp), Dm = m.diffusion(xm);
    Mat dk(m.dim);
    for (int i = 0; i < m.dim; ++i)
      for (int j = 0; j < m.dim; ++j) dk(i, j) = (Dp(i, j) - Dm(i, j)) / (2.0 * h);
    g.push_back(std::move(dk));
  }
  return g;
}

/// ∇φ^ss, analytic when provided, else central differences of phi_ss.
inline Vec grad_phi_ss(const ModelSpec& m, const Vec& x) {
  if (m.grad_phi_ss) return m.grad_phi_ss(x);
  if (!m.phi_ss) throw InvalidParam("model '" + m.name + "' has no stationary rate function");
  Vec g(static_cast<std::size_t>(m.dim));
  for (int j = 0; j < m.dim; ++j) {
    const double h = detail::fd_step(x[static_cast<std::size_t>(j)]);
    Vec xp = x, xm = x;
    xp[static_cast<std::size_t>(j)] += h;
    xm[static_cast<std::size_t>(j)] -= h;
    g[static_cast<std::size_t>(j)] = (m.phi_ss(xp) - m.phi_ss(xm)) / (2.0 * h);
  }
  return g;
}

namespace detail {

inline double require_param(const std::map<std::string, double>& params, const std::string& key,
                            double fallback, bool positive) {
  double v = fallback;
  if (auto it = params.find(key); it != params.end()) v = it->second;
  if (positive && !(v > 0.0))
    throw InvalidParam("parameter '" + key + "' must be positive, got " + std::to_string(v));
  return v;
}

inline void reject_unknown_params(const std::map<std::string, double>& params,
                                  std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw InvalidParam("unknown parameter '" + key + "'");
  }
}

}  // namespace detail

/// Built-in model families. Each is a pure function of (name, params).
inline ModelSpec builtin_model(const std::string& name,
                               const std::map<std::string, double>& params = {}) {
  ModelSpec m;
  m.name = name;
  m.params = params;

  if (name == "ou1d") {
    detail::reject_unknown_params(params, {"b", "D"});
    const double b = detail::require_param(params, "b", 1.0, true);
    const double D = detail::require_param(params, "D", 1.0, true);
    m.dim = 1;
    m.params = {{"b", b}, {"D", D}};
    m.drift = [b](const Vec& x) { return Vec{-b * x[0]}; };
    m.diffusion = [D](const Vec&) { return Mat::diagonal({D}); };
    m.phi_ss = [b, D](const Vec& x) { return b * x[0] * x[0] / (2.0 * D); };
    m.grad_phi_ss = [b, D](const Vec& x) { return Vec{b * x[0] / D}; };
    m.circulation = [](const Vec&) { return Vec{0.0}; };
    m.drift_jacobian = [b](const Vec&) {
      Mat J(1);
      J(0, 0) = -b;
      return J;
    };
    m.diffusion_gradient = [](const Vec&) { return std::vector<Mat>{Mat(1)}; };
    return m;
  }

  if (name == "linear2d") {
    detail::reject_unknown_params(params, {"kappa", "omega"});
    const double kappa = detail::require_param(params, "kappa", 1.0, true);
    const double omega = detail::require_param(params, "omega", 0.0, false);
    m.dim = 2;
    m.params = {{"kappa", kappa}, {"omega", omega}};
    m.drift = [kappa, omega](const Vec& x) {
      return Vec{-kappa * x[0] + omega * x[1], -omega * x[0] - kappa * x[1]};
    };
    m.diffusion = [](const Vec&) { return Mat::identity(2); };
    m.phi_ss = [kappa](const Vec& x) { return 0.5 * kappa * (x[0] * x[0] + x[1] * x[1]); };
    m.grad_phi_ss = [kappa](const Vec& x) { return Vec{kappa * x[0], kappa * x[1]}; };
    m.circulation = [omega](const Vec& x) { return Vec{omega * x[1], -omega * x[0]}; };
    m.drift_jacobian = [kappa, omega](const Vec&) {
      Mat J(2);
      J(0, 0) = -kappa;
      J(0, 1) = omega;
      J(1, 0) = -omega;
      J(1, 1) = -kappa;
      return J;
    };
    m.diffusion_gradient = [](const Vec&) { return std::vector<Mat>{Mat(2), Mat(2)}; };
    return m;
  }

  if (name == "doublewell1d") {
    detail::reject_unknown_params(params, {});
    m.dim = 1;
    m.params = {};
    m.drift = [](const Vec& x) { return Vec{x[0] - x[0] * x[0] * x[0]}; };
    m.diffusion = [](const Vec&) { return Mat::identity(1); };
    // x⁴/4 − x²/2 shifted so the wells at x = ±1 sit at zero.
    m.phi_ss = [](const Vec& x) {
      const double s = x[0] * x[0];
      return 0.25 * s * s - 0.5 * s + 0.25;
    };
    m.grad_phi_ss = [](const Vec& x) { return Vec{x[0] * x[0] * x[0] - x[0]}; };
    m.circulation = [](const Vec&) { return Vec{0.0}; };
    m.drift_jacobian = [](const Vec& x) {
      Mat J(1);
      J(0, 0) = 1.0 - 3.0 * x[0] * x[0];
      return J;
    };
    m.diffusion_gradient = [](const Vec&) { return std::vector<Mat>{Mat(1)}; };
    return m;
  }

  if (name == "custom")
    throw InvalidParam("custom models need drift/diffusion expressions; use custom_model() or "
                       "the model.drift_expr / model.diffusion_expr config keys");

  throw UnknownModel("unknown model '" + name + "' (expected ou1d, linear2d, doublewell1d, custom)");
}

/// Expression-defined model: one drift expression per component and a full
/// diffusion expression matrix, both over x1..xn and the named parameters.
inline ModelSpec custom_model(int dim, const std::vector<std::string>& drift_exprs,
                              const std::vector<std::vector<std::string>>& diffusion_exprs,
                              const std::map<std::string, double>& params = {},
                              const std::string& name = "custom") {
  if (dim < 1) throw InvalidParam("custom model: dimension must be >= 1");
  if (static_cast<int>(drift_exprs.size()) != dim)
    throw InvalidParam("custom model: expected " + std::to_string(dim) + " drift expressions");
  if (static_cast<int>(diffusion_exprs.size()) != dim)
    throw InvalidParam("custom model: diffusion matrix must have " + std::to_string(dim) + " rows");
  for (const auto& row : diffusion_exprs)
    if (static_cast<int>(row.size()) != dim)
      throw InvalidParam("custom model: diffusion matrix must be square");

  std::vector<expr::Compiled> bs;
  for (const auto& e : drift_exprs) bs.push_back(expr::compile(e, dim, params));
  std::vector<std::vector<expr::Compiled>> ds(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i)
    for (const auto& e : diffusion_exprs[static_cast<std::size_t>(i)])
      ds[static_cast<std::size_t>(i)].push_back(expr::compile(e, dim, params));

  ModelSpec m;
  m.name = name;
  m.dim = dim;
  m.params = params;
  m.drift = [bs, dim](const Vec& x) {
    Vec b(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) b[static_cast<std::size_t>(i)] = bs[static_cast<std::size_t>(i)](x);
    return b;
  };
  m.diffusion = [ds, dim](const Vec& x) {
    Mat D(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) D(i, j) = ds[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](x);
    return D;
  };
  return m;
}

/// Builds a ModelSpec from structured-text config keys: model.name,
/// model.params.<name>, and for custom models model.dim plus
/// model.drift_expr.<i> and model.diffusion_expr.<i>.<j> (1-based).
inline ModelSpec model_from_config(const std::map<std::string, std::string>& cfg) {
  auto get = [&cfg](const std::string& key) -> const std::string* {
    auto it = cfg.find(key);
    return it == cfg.end() ? nullptr : &it->second;
  };
  auto parse_number = [](const std::string& key, const std::string& value) {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
    }
  };

  const std::string* name = get("model.name");
  if (!name) throw ConfigError("key 'model.name': required");
  std::map<std::string, double> params;
  for (const auto& [key, value] : cfg) {
    const std::string prefix = "model.params.";
    if (key.rfind(prefix, 0) == 0) params[key.substr(prefix.size())] = parse_number(key, value);
  }
  if (*name != "custom") {
    try {
      return builtin_model(*name, params);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
  }
  const std::string* dim_text = get("model.dim");
  if (!dim_text) throw ConfigError("key 'model.dim': required for custom models");
  const int dim = static_cast<int>(parse_number("model.dim", *dim_text));
  if (dim < 1) throw ConfigError("key 'model.dim': must be at least 1");
  std::vector<std::string> drift;
  std::vector<std::vector<std::string>> diffusion(static_cast<std::size_t>(dim));
  for (int i = 1; i <= dim; ++i) {
    const std::string dk = "model.drift_expr." + std::to_string(i);
    const std::string* de = get(dk);
    if (!de) throw ConfigError("key '" + dk + "': required for custom models");
    drift.push_back(*de);
    for (int j = 1; j <= dim; ++j) {
      const std::string ek = "model.diffusion_expr." + std::to_string(i) + "." + std::to_string(j);
      const std::string* ee = get(ek);
      if (!ee) throw ConfigError("key '" + ek + "': required for custom models");
      diffusion[static_cast<std::size_t>(i - 1)].push_back(*ee);
    }
  }
  return custom_model(dim, drift, diffusion, params);
}

struct ValidationReport {
  double spd_margin = 0.0;            // min eigenvalue of D over the grid
  double max_asymmetry = 0.0;         // max |D - Dᵀ| entry over the grid
  std::optional<double> decomposition_residual;  // max |b + D∇φ^ss − γ|
  std::optional<double> hje_residual;            // max |∇φ^ssᵀ(D∇φ^ss + b)|
  bool pass = false;
};

/// Default validation grid: 41 nodes per axis over the given bounds.
inline Grid default_validation_grid(const ModelSpec& m, double lo = -3.0, double hi = 3.0) {
  return Grid::uniform(Vec(static_cast<std::size_t>(m.dim), lo),
                       Vec(static_cast<std::size_t>(m.dim), hi),
                       std::vector<int>(static_cast<std::size_t>(m.dim), 41));
}

inline ValidationReport validate_model(const ModelSpec& m, const Grid& grid) {
  if (grid.dim() != m.dim) throw InvalidParam("validation grid dimension mismatch");
  ValidationReport r;
  r.spd_margin = std::numeric_limits<double>::infinity();
  const bool analytic = m.has_phi_ss() && m.has_circulation();
  double decomp = 0.0, hje = 0.0;
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const Vec x = grid.node(node);
    const Mat D = m.diffusion(x);
    r.max_asymmetry = std::max(r.max_asymmetry, max_asymmetry(D));
    const Vec eig = sym_eigenvalues(D);
    r.spd_margin = std::min(r.spd_margin, eig.front());
    if (eig.front() <= 0.0)
      throw DegenerateDiffusion("diffusion not positive definite at a grid node (min eigenvalue " +
                                std::to_string(eig.front()) + ")");
    if (analytic) {
      const Vec b = m.drift(x);
      const Vec g = grad_phi_ss(m, x);
      const Vec gamma = m.circulation(x);
      const Vec Dg = matvec(D, g);
      double point = 0.0;
      for (int i = 0; i < m.dim; ++i)
        point = std::max(point, std::fabs(b[static_cast<std::size_t>(i)] +
                                          Dg[static_cast<std::size_t>(i)] -
                                          gamma[static_cast<std::size_t>(i)]));
      decomp = std::max(decomp, point);
      hje = std::max(hje, std::fabs(dot(g, Dg + b)));
    }
  }
  if (analytic) {
    r.decomposition_residual = decomp;
    r.hje_residual = hje;
    if (decomp > 1e-10)
      throw DecompositionMismatch("drift decomposition residual " + std::to_string(decomp) +
                                  " exceeds 1e-10");
  }
  if (r.max_asymmetry > 1e-12)
    throw DegenerateDiffusion("diffusion asymmetry " + std::to_string(r.max_asymmetry) +
                              " exceeds 1e-12");
  r.pass = true;
  return r;
}

}  // namespace ldt
