#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/grid.hpp"
#include "ldt/hamjac.hpp"
#include "ldt/model.hpp"
#include "ldt/thermo.hpp"

namespace ldt::eit {

/// Flux-dependent rate function φ(x, y; Δt) = φ(x) + Δt yᵀ D(x) y.
inline double rate_function(const ModelSpec& m, const PhiSS& phi, const Vec& x, const Vec& y,
                            double delta_t) {
  return phi(x) + delta_t * quad_form(m.diffusion(x), y, y);
}

/// Rate-function values over the (x, y) product grid.
struct EITField {
  Grid x_grid;
  Grid y_grid;
  double delta_t = 0.0;
  std::vector<double> values;  // [x_node][y_node]

  double at(std::size_t xi, std::size_t yi) const { return values[xi * y_grid.size() + yi]; }
};

inline EITField make_field(const ModelSpec& m, const PhiSS& phi, const Grid& x_grid,
                           const Grid& y_grid, double delta_t) {
  if (!(delta_t > 0.0)) throw InvalidParam("eit field: delta_t must be positive");
  if (x_grid.dim() != m.dim || y_grid.dim() != m.dim)
    throw InvalidParam("eit field: grid dimension mismatch");
  EITField f;
  f.x_grid = x_grid;
  f.y_grid = y_grid;
  f.delta_t = delta_t;
  f.values.resize(x_grid.size() * y_grid.size());
  for (std::size_t xi = 0; xi < x_grid.size(); ++xi) {
    const Vec x = x_grid.node(xi);
    const double base = phi(x);
    const Mat D = m.diffusion(x);
    for (std::size_t yi = 0; yi < y_grid.size(); ++yi) {
      const Vec y = y_grid.node(yi);
      f.values[xi * y_grid.size() + yi] = base + delta_t * quad_form(D, y, y);
    }
  }
  return f;
}

/// Default momentum grid: ±3 standard deviations of the momentum law at the
/// given ε, with a node exactly at y = 0 (odd node count).
inline Grid default_momentum_grid(const ModelSpec& m, double epsilon, double delta_t,
                                  int nodes_per_axis = 21) {
  if (nodes_per_axis % 2 == 0) ++nodes_per_axis;
  const Vec origin(static_cast<std::size_t>(m.dim), 0.0);
  const Mat Dinv = inverse(m.diffusion(origin));
  double max_var = 0.0;
  for (int i = 0; i < m.dim; ++i) max_var = std::max(max_var, epsilon / (2.0 * delta_t) * Dinv(i, i));
  const double half = 3.0 * std::sqrt(max_var);
  return Grid::uniform(Vec(static_cast<std::size_t>(m.dim), -half),
                       Vec(static_cast<std::size_t>(m.dim), half),
                       std::vector<int>(static_cast<std::size_t>(m.dim), nodes_per_axis));
}

struct ContractionResult {
  ScalarField phi_x;                  // min over y per x node (analytic: value at y = 0)
  std::vector<double> argmin;         // node-major analytic minimizer (identically 0)
  std::vector<double> grid_argmin;    // node-major argmin over the tabulated y grid
  double max_argmin_norm = 0.0;       // of the analytic minimizer
  double max_grid_argmin_norm = 0.0;  // of the tabulated one; within one y cell
};

/// Contraction over the momentum: the quadratic Δt yᵀD y is positive
/// definite, so the exact minimizer is y = 0 with value φ(x); the tabulated
/// argmin is kept as a cross-check.
inline ContractionResult contract(const EITField& f) {
  const int d = f.y_grid.dim();
  bool has_zero = false;
  std::size_t zero_node = 0;
  for (std::size_t yi = 0; yi < f.y_grid.size(); ++yi)
    if (norm_inf(f.y_grid.node(yi)) < 0.5 * f.y_grid.spacing(0)) {
      has_zero = true;
      zero_node = yi;
      break;
    }
  if (!has_zero) throw InvalidParam("contract: momentum grid does not contain y = 0");

  ContractionResult out;
  out.phi_x.grid = f.x_grid;
  out.phi_x.values.resize(f.x_grid.size());
  out.argmin.assign(f.x_grid.size() * static_cast<std::size_t>(d), 0.0);
  out.grid_argmin.assign(f.x_grid.size() * static_cast<std::size_t>(d), 0.0);
  for (std::size_t xi = 0; xi < f.x_grid.size(); ++xi) {
    out.phi_x.values[xi] = f.at(xi, zero_node);
    std::size_t best = 0;
    double best_v = f.at(xi, 0);
    for (std::size_t yi = 1; yi < f.y_grid.size(); ++yi)
      if (f.at(xi, yi) < best_v) {
        best_v = f.at(xi, yi);
        best = yi;
      }
    const Vec yb = f.y_grid.node(best);
    for (int c = 0; c < d; ++c)
      out.grid_argmin[xi * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
          yb[static_cast<std::size_t>(c)];
    out.max_grid_argmin_norm = std::max(out.max_grid_argmin_norm, norm_inf(yb));
  }
  return out;
}

/// A Gaussian law with explicit normalization, used for the conditional
/// velocity and momentum distributions at fixed x.
struct GaussianLaw {
  Vec mean;
  Mat covariance;
  double norm_const = 0.0;  // prefactor of exp(−½ (v−μ)ᵀ Σ⁻¹ (v−μ))

  double pdf(const Vec& v) const {
    Mat cov = covariance;
    const Vec r = v - mean;
    return norm_const * std::exp(-0.5 * dot(r, solve(cov, r)));
  }
};

struct ConditionalLaws {
  GaussianLaw velocity;  // mean b(x), covariance (2ε/Δt) D(x)
  GaussianLaw momentum;  // mean 0,    covariance ε/(2Δt) D⁻¹(x)
};

inline ConditionalLaws conditional_densities(const ModelSpec& m, const Vec& x, double epsilon,
                                             double delta_t) {
  if (!(epsilon > 0.0) || !(delta_t > 0.0))
    throw InvalidParam("conditional_densities: epsilon and delta_t must be positive");
  const int n = m.dim;
  const Mat D = m.diffusion(x);
  const double detD = determinant(D);
  if (!(detD > 0.0)) throw SingularDiffusion("conditional_densities: det D must be positive");
  const double pi = 3.14159265358979323846;

  ConditionalLaws laws;
  laws.velocity.mean = m.drift(x);
  laws.velocity.covariance = Mat(n);
  laws.momentum.mean.assign(static_cast<std::size_t>(n), 0.0);
  laws.momentum.covariance = Mat(n);
  const Mat Dinv = inverse(D);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      laws.velocity.covariance(i, j) = 2.0 * epsilon / delta_t * D(i, j);
      laws.momentum.covariance(i, j) = epsilon / (2.0 * delta_t) * Dinv(i, j);
    }
  laws.velocity.norm_const = std::pow(4.0 * pi * epsilon / delta_t, -0.5 * n) / std::sqrt(detD);
  laws.momentum.norm_const = std::pow(pi * epsilon / delta_t, -0.5 * n) * std::sqrt(detD);
  return laws;
}

struct EITDynamicsConfig {
  std::function<double(const Vec& x, const Vec& y)> alpha;  // damping ≥ 0; empty means 0
  double delta_t = 0.1;
  double step = 1e-3;
  int record_stride = 1;
};

/// One row per recorded instant of the relaxation flow, with the pointwise
/// split of dφ(x, y; Δt)/dt into a flux-divergence term and two production
/// terms (∇φᵀb and −2Δt α yᵀDy, each nonpositive).
struct RelaxationLedger {
  std::vector<double> times;
  std::vector<PhaseState> states;
  std::vector<double> phi;
  std::vector<double> flux_term;
  std::vector<double> production_state;
  std::vector<double> production_momentum;
  double cumulative_increase = 0.0;  // Σ max(0, φ_{k+1} − φ_k)

  double dissipation_rate(std::size_t k) const {
    return -(flux_term[k] + production_state[k] + production_momentum[k]);
  }
};

namespace detail {

/// Scalar divergence ∂_j (2 D_jk y_k + b_j) with y held fixed.
inline double flow_divergence(const ModelSpec& m, const Vec& x, const Vec& y) {
  const Mat J = drift_jacobian(m, x);
  const auto Dg = diffusion_gradient(m, x);
  double div = 0.0;
  for (int j = 0; j < m.dim; ++j) {
    div += J(j, j);
    for (int k = 0; k < m.dim; ++k) div += 2.0 * Dg[static_cast<std::size_t>(j)](j, k) * y[static_cast<std::size_t>(k)];
  }
  return div;
}

/// Relaxation right-hand side:
///   dx_i/dt = 2 D_ij y_j + b_i
///   dy_i/dt = −(Δt)⁻¹ ∂_i φ^ss + ½ [∂_j (2 D_jk y_k + b_j)] y_i − α y_i
/// The divergence factor is a scalar multiplying y; in one dimension this is
/// the unique reading, and it keeps the ledger's production terms
/// sign-definite in general.
inline void relaxation_rhs(const ModelSpec& m, const PhiSS& phi,
                           const std::function<double(const Vec&, const Vec&)>& alpha,
                           double delta_t, const Vec& x, const Vec& y, Vec& dx, Vec& dy) {
  const Mat D = m.diffusion(x);
  const Vec b = m.drift(x);
  const Vec Dy = matvec(D, y);
  for (int i = 0; i < m.dim; ++i)
    dx[static_cast<std::size_t>(i)] = 2.0 * Dy[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)];
  const Vec g = phi.grad(x);
  const double div = flow_divergence(m, x, y);
  double a = 0.0;
  if (alpha) {
    a = alpha(x, y);
    if (a < 0.0) throw NegativeAlpha("relaxation damping is negative at a sampled point");
  }
  for (int i = 0; i < m.dim; ++i)
    dy[static_cast<std::size_t>(i)] = -g[static_cast<std::size_t>(i)] / delta_t +
                                      (0.5 * div - a) * y[static_cast<std::size_t>(i)];
}

}  // namespace detail

/// Pointwise dφ/dt ledger entries at a phase point, assuming the relaxation
/// dynamics for dy/dt. flux = ∂_x · [Δt (yᵀDy)(2Dy + b)];
/// production_state = ∇φᵀ b; production_momentum = −2 Δt α yᵀ D y.
struct LedgerEntry {
  double phi = 0.0;
  double flux = 0.0;
  double production_state = 0.0;
  double production_momentum = 0.0;
  double total() const { return flux + production_state + production_momentum; }
};

inline LedgerEntry ledger_entry(const ModelSpec& m, const PhiSS& phi,
                                const std::function<double(const Vec&, const Vec&)>& alpha,
                                double delta_t, const Vec& x, const Vec& y) {
  const Mat D = m.diffusion(x);
  const Vec b = m.drift(x);
  const Vec Dy = matvec(D, y);
  const double yDy = dot(y, Dy);
  const auto Dg = diffusion_gradient(m, x);

  LedgerEntry e;
  e.phi = phi(x) + delta_t * yDy;
  // ∂_i (yᵀDy) = yᵀ (∂_i D) y, then the product rule against the flow field.
  double div_term = yDy * detail::flow_divergence(m, x, y);
  for (int i = 0; i < m.dim; ++i) {
    const double d_yDy = quad_form(Dg[static_cast<std::size_t>(i)], y, y);
    div_term += d_yDy * (2.0 * Dy[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)]);
  }
  e.flux = delta_t * div_term;
  e.production_state = dot(phi.grad(x), b);
  const double a = alpha ? alpha(x, y) : 0.0;
  e.production_momentum = -2.0 * delta_t * a * yDy;
  return e;
}

inline RelaxationLedger relaxation(const ModelSpec& m, const PhiSS& phi,
                                   const EITDynamicsConfig& cfg, const PhaseState& s0, double T,
                                   double blowup_bound = 1e8) {
  if (!(cfg.delta_t > 0.0)) throw InvalidParam("relaxation: delta_t must be positive");
  if (!(cfg.step > 0.0) || !(T > 0.0)) throw InvalidParam("relaxation: T and step must be positive");
  const int d = m.dim;
  const long n = static_cast<long>(std::llround(T / cfg.step));

  RelaxationLedger out;
  Vec x = s0.x, y = s0.y;
  Vec kx1(static_cast<std::size_t>(d)), ky1(static_cast<std::size_t>(d));
  Vec kx2 = kx1, ky2 = ky1, kx3 = kx1, ky3 = ky1, kx4 = kx1, ky4 = ky1;

  double prev_phi = 0.0;
  auto record = [&](double t) {
    const LedgerEntry e = ledger_entry(m, phi, cfg.alpha, cfg.delta_t, x, y);
    if (!out.times.empty()) out.cumulative_increase += std::max(0.0, e.phi - prev_phi);
    prev_phi = e.phi;
    out.times.push_back(t);
    out.states.push_back({x, y});
    out.phi.push_back(e.phi);
    out.flux_term.push_back(e.flux);
    out.production_state.push_back(e.production_state);
    out.production_momentum.push_back(e.production_momentum);
  };
  record(0.0);

  for (long s = 1; s <= n; ++s) {
    const double h = cfg.step;
    detail::relaxation_rhs(m, phi, cfg.alpha, cfg.delta_t, x, y, kx1, ky1);
    detail::relaxation_rhs(m, phi, cfg.alpha, cfg.delta_t, x + (0.5 * h) * kx1, y + (0.5 * h) * ky1, kx2, ky2);
    detail::relaxation_rhs(m, phi, cfg.alpha, cfg.delta_t, x + (0.5 * h) * kx2, y + (0.5 * h) * ky2, kx3, ky3);
    detail::relaxation_rhs(m, phi, cfg.alpha, cfg.delta_t, x + h * kx3, y + h * ky3, kx4, ky4);
    for (int i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(i);
      x[k] += h / 6.0 * (kx1[k] + 2.0 * kx2[k] + 2.0 * kx3[k] + kx4[k]);
      y[k] += h / 6.0 * (ky1[k] + 2.0 * ky2[k] + 2.0 * ky3[k] + ky4[k]);
    }
    if (norm_inf(x) > blowup_bound || norm_inf(y) > blowup_bound)
      throw BlowUp("relaxation trajectory left the bound at t = " + std::to_string(s * h));
    if (s % cfg.record_stride == 0 || s == n) record(static_cast<double>(s) * cfg.step);
  }
  return out;
}

/// Momentum on the dy/dt = 0 surface of the one-dimensional relaxation flow
/// with constant damping, found by Newton iteration on
///   g(y) = ½ (2 D'(x) y + b'(x)) y − α y − (Δt)⁻¹ φ'(x) = 0.
inline double fixed_surface_momentum(const ModelSpec& m, const PhiSS& phi, double alpha_const,
                                     double x, double delta_t) {
  if (m.dim != 1) throw DimUnsupported("fixed_surface_momentum: one-dimensional models only");
  const Vec xs{x};
  const double dphi = phi.grad(xs)[0];
  const double bp = drift_jacobian(m, xs)(0, 0);
  const double Dp = diffusion_gradient(m, xs)[0](0, 0);
  double y = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double g = Dp * y * y + (0.5 * bp - alpha_const) * y - dphi / delta_t;
    const double dg = 2.0 * Dp * y + 0.5 * bp - alpha_const;
    if (std::fabs(dg) < 1e-300) break;
    const double y_next = y - g / dg;
    if (std::fabs(y_next - y) < 1e-15 * std::max(1.0, std::fabs(y))) return y_next;
    y = y_next;
  }
  return y;
}

struct NessResult {
  std::vector<Vec> minima;        // argmin of φ^ss over the search grid (all ties)
  std::vector<Vec> steady_flux;   // γ evaluated at each minimum
  Vec y_star;                     // identically zero
};

/// Locates the minima of the stationary rate function and reports the
/// steady flux γ(x*) there; nonzero flux at a minimum marks a NESS.
inline NessResult ness_diagnostics(const ModelSpec& m, const PhiSS& phi, const Grid& search_grid,
                                   double value_tol = 1e-9) {
  NessResult out;
  out.y_star.assign(static_cast<std::size_t>(m.dim), 0.0);

  std::vector<double> values(search_grid.size());
  for (std::size_t node = 0; node < search_grid.size(); ++node)
    values[node] = phi(search_grid.node(node));

  // Candidates are local minima of the tabulated values (axis neighbors).
  std::vector<std::size_t> candidates;
  for (std::size_t node = 0; node < search_grid.size(); ++node) {
    auto idx = search_grid.unflatten(node);
    bool local_min = true;
    for (int a = 0; a < m.dim && local_min; ++a) {
      for (int dir : {-1, 1}) {
        auto nb = idx;
        nb[static_cast<std::size_t>(a)] += dir;
        if (nb[static_cast<std::size_t>(a)] < 0 ||
            nb[static_cast<std::size_t>(a)] >= search_grid.shape[static_cast<std::size_t>(a)])
          continue;
        if (values[search_grid.flatten(nb)] < values[node]) {
          local_min = false;
          break;
        }
      }
    }
    if (local_min) candidates.push_back(node);
  }

  // Polish each candidate by gradient descent with backtracking, then keep
  // all minima tied with the global one.
  std::vector<Vec> polished;
  std::vector<double> polished_value;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t node : candidates) {
    Vec x = search_grid.node(node);
    double v = values[node];
    for (int it = 0; it < 200; ++it) {
      const Vec g = phi.grad(x);
      if (norm_inf(g) < 1e-12) break;
      double step = 1.0;
      bool moved = false;
      while (step > 1e-14) {
        Vec trial = x - step * g;
        const double tv = phi(trial);
        if (tv < v) {
          x = std::move(trial);
          v = tv;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    bool dup = false;
    for (const Vec& seen : polished)
      if (norm_inf(seen - x) < 1e-6) dup = true;
    if (dup) continue;
    polished.push_back(std::move(x));
    polished_value.push_back(v);
    best = std::min(best, v);
  }
  for (std::size_t i = 0; i < polished.size(); ++i) {
    if (polished_value[i] > best + value_tol) continue;
    const Vec& x = polished[i];
    out.minima.push_back(x);
    const Vec gamma = m.drift(x) + matvec(m.diffusion(x), phi.grad(x));
    out.steady_flux.push_back(gamma);
  }
  return out;
}

}  // namespace ldt::eit
