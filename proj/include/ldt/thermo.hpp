#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "ldt/density.hpp"
#include "ldt/errors.hpp"
#include "ldt/grid.hpp"
#include "ldt/model.hpp"

namespace ldt {

/// Handle for a stationary rate function: either the model's analytic fields
/// or a gridded estimate (values interpolated multilinearly, gradient from
/// the precomputed difference field).
class PhiSS {
 public:
  static PhiSS analytic(const ModelSpec& m) {
    if (!m.has_phi_ss()) throw InvalidParam("model '" + m.name + "' has no analytic rate function");
    PhiSS p;
    ModelSpec copy = m;
    p.value_ = [copy](const Vec& x) { return copy.phi_ss(x); };
    p.gradient_ = [copy](const Vec& x) { return grad_phi_ss(copy, x); };
    return p;
  }

  static PhiSS gridded(const ScalarField& field) {
    PhiSS p;
    auto shared_field = std::make_shared<ScalarField>(field);
    auto shared_grad = std::make_shared<VectorField>(gradient(field));
    p.value_ = [shared_field](const Vec& x) { return interpolate(*shared_field, x); };
    p.gradient_ = [shared_grad](const Vec& x) { return interpolate(*shared_grad, x); };
    p.grid_ = field.grid;
    p.is_gridded_ = true;
    return p;
  }

  double operator()(const Vec& x) const { return value_(x); }
  Vec grad(const Vec& x) const { return gradient_(x); }
  bool is_gridded() const { return is_gridded_; }

 private:
  std::function<double(const Vec&)> value_;
  std::function<Vec(const Vec&)> gradient_;
  Grid grid_;
  bool is_gridded_ = false;
};

struct DecompositionField {
  Grid grid;
  std::vector<double> gamma;  // node-major circulation estimate b + D ∇φ^ss
  double max_orthogonality_residual = 0.0;  // normalized |γᵀ∇φ^ss|
};

/// Splits the drift as b = −D ∇φ^ss + γ and reports how orthogonal the
/// circulation is to ∇φ^ss. The normalization floor keeps the ratio finite
/// where both factors vanish (critical points).
inline DecompositionField drift_decomposition(const ModelSpec& m, const PhiSS& phi,
                                              const Grid& grid, double floor = 1e-30) {
  DecompositionField out;
  out.grid = grid;
  const int d = grid.dim();
  out.gamma.assign(grid.size() * static_cast<std::size_t>(d), 0.0);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const Vec x = grid.node(node);
    const Vec g = phi.grad(x);
    const Vec gamma = m.drift(x) + matvec(m.diffusion(x), g);
    for (int c = 0; c < d; ++c)
      out.gamma[node * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
          gamma[static_cast<std::size_t>(c)];
    const double resid = std::fabs(dot(gamma, g)) / (norm2(gamma) * norm2(g) + floor);
    out.max_orthogonality_residual = std::max(out.max_orthogonality_residual, resid);
  }
  return out;
}

/// Total entropy production and its two nonnegative parts, evaluated at a
/// point; the three satisfy total = dissipation + housekeeping.
struct EPRBreakdown {
  double total = 0.0;                    // bᵀ D⁻¹ b
  double free_energy_dissipation = 0.0;  // [D∇φ^ss]ᵀ D⁻¹ [D∇φ^ss]
  double housekeeping = 0.0;             // γᵀ D⁻¹ γ
  double residual() const { return total - free_energy_dissipation - housekeeping; }
};

inline EPRBreakdown epr_breakdown(const ModelSpec& m, const PhiSS& phi, const Vec& x) {
  const Mat D = m.diffusion(x);
  const Vec b = m.drift(x);
  const Vec g = phi.grad(x);
  const Vec Dg = matvec(D, g);
  const Vec gamma = b + Dg;
  EPRBreakdown out;
  out.total = dot(b, solve(D, b));
  out.free_energy_dissipation = dot(Dg, g);  // = (Dg)ᵀ D⁻¹ (Dg)
  out.housekeeping = dot(gamma, solve(D, gamma));
  return out;
}

/// dφ^ss/dt along the deterministic flow, ∇φ^ssᵀ b; nonpositive and equal to
/// minus the dissipation part of the entropy production.
inline double lyapunov_rate(const ModelSpec& m, const PhiSS& phi, const Vec& x) {
  return dot(phi.grad(x), m.drift(x));
}

/// Differential Gibbs entropy −∫ p ln p of a gridded density (0·ln 0 := 0).
inline double gibbs_entropy(const DensityEstimate& p) {
  double s = 0.0;
  for (double v : p.values)
    if (v > 0.0) s -= v * std::log(v);
  return s * p.grid.cell_volume();
}

struct EntropyReport {
  double s_cit = 0.0;
  double s_meso_eit = 0.0;
  double difference = 0.0;            // s_meso_eit − s_cit
  double ds_cit_dt_flux = 0.0;        // −∫ bᵀ ∇p
  double ds_cit_dt_production = 0.0;  // ∫ ∇pᵀ (εD) ∇p / p  ≥ 0
  double delta_t = 0.0;
};

/// Flux-dependent entropy bookkeeping at time resolution delta_t. The
/// short-time transition kernel is Gaussian with covariance 2 ε Δt D(x), so
/// its differential entropy is taken in closed form instead of by quadrature:
///   n/2 + (n/2) ln(4π ε Δt) + ½ ln det D(x),
/// averaged over p. Valid only while Δt · max|∂b/∂x| stays small, which is
/// checked. The Δt → 0 divergence through ln Δt is reported as-is.
inline EntropyReport meso_eit_entropy(const ModelSpec& m, double epsilon,
                                      const DensityEstimate& p, double delta_t) {
  if (!(delta_t > 0.0)) throw InvalidParam("meso_eit_entropy: delta_t must be positive");
  if (!(epsilon > 0.0)) throw InvalidParam("meso_eit_entropy: epsilon must be positive");
  const Grid& g = p.grid;
  const int n = g.dim();

  double max_jac = 0.0;
  for (std::size_t node = 0; node < g.size(); node += std::max<std::size_t>(1, g.size() / 512)) {
    const Mat J = drift_jacobian(m, g.node(node));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) max_jac = std::max(max_jac, std::fabs(J(i, j)));
  }
  if (delta_t * max_jac > 0.1)
    throw KernelInvalid("meso_eit_entropy: delta_t too coarse for the short-time kernel "
                        "(delta_t * max|∂b/∂x| = " +
                        std::to_string(delta_t * max_jac) + " > 0.1)");

  EntropyReport r;
  r.delta_t = delta_t;
  r.s_cit = gibbs_entropy(p);

  const double vol = g.cell_volume();
  const double kernel_const = 0.5 * n + 0.5 * n * std::log(4.0 * 3.14159265358979323846 * epsilon * delta_t);
  double mean_kernel_entropy = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (p.values[node] <= 0.0) continue;
    const double h_kernel = kernel_const + 0.5 * std::log(determinant(m.diffusion(g.node(node))));
    mean_kernel_entropy += p.values[node] * h_kernel;
  }
  mean_kernel_entropy *= vol;
  r.difference = mean_kernel_entropy;
  r.s_meso_eit = r.s_cit + r.difference;

  // Rate split of dS/dt for the state-only entropy, by parts:
  // flux −∫ bᵀ∇p and production ∫ ∇pᵀ(εD)∇p / p.
  ScalarField pf{g, p.values, {}};
  const VectorField grad_p = gradient(pf);
  double flux = 0.0, production = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    const Vec x = g.node(node);
    const Vec gp = grad_p.at(node);
    flux -= dot(m.drift(x), gp);
    if (p.values[node] > 0.0)
      production += epsilon * quad_form(m.diffusion(x), gp, gp) / p.values[node];
  }
  r.ds_cit_dt_flux = flux * vol;
  r.ds_cit_dt_production = production * vol;
  return r;
}

/// The ε/Δt product pairing the momentum fluctuation scale with the time
/// resolution; scale-invariant under (ε, Δt) → (cε, cΔt).
inline double uncertainty_product(double epsilon, double delta_t) {
  if (!(epsilon > 0.0) || !(delta_t > 0.0))
    throw InvalidParam("uncertainty_product: both arguments must be positive");
  return epsilon / delta_t;
}

}  // namespace ldt
