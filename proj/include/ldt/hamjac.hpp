#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/grid.hpp"
#include "ldt/linalg.hpp"
#include "ldt/model.hpp"

namespace ldt {

struct PhaseState {
  Vec x;  // state
  Vec y;  // conjugate momentum, y = ∂φ/∂x
};

/// H(x, y) = yᵀ D(x) y + yᵀ b(x)
inline double hamiltonian(const ModelSpec& m, const PhaseState& s) {
  const Mat D = m.diffusion(s.x);
  return quad_form(D, s.y, s.y) + dot(s.y, m.drift(s.x));
}

struct LagrangianResult {
  double value = 0.0;  // L = ¼ (ẋ−b)ᵀ D⁻¹ (ẋ−b)
  Vec momentum;        // y = ½ D⁻¹ (ẋ−b)
};

inline LagrangianResult lagrangian(const ModelSpec& m, const Vec& x, const Vec& xdot) {
  const Vec r = xdot - m.drift(x);
  const Vec Dinv_r = solve(m.diffusion(x), r);
  LagrangianResult out;
  out.momentum = 0.5 * Dinv_r;
  out.value = 0.25 * dot(r, Dinv_r);
  return out;
}

namespace detail {

/// Right-hand side of the characteristic Hamiltonian dynamics.
/// Index convention, componentwise:
///   dx_i/dt =  2 D_ij y_j + b_i
///   dy_i/dt = −y_j (∂D_jk/∂x_i) y_k − y_j (∂b_j/∂x_i)
inline void hamilton_rhs(const ModelSpec& m, const Vec& x, const Vec& y, Vec& dx, Vec& dy) {
  const int d = m.dim;
  const Mat D = m.diffusion(x);
  const Vec b = m.drift(x);
  const Vec Dy = matvec(D, y);
  for (int i = 0; i < d; ++i)
    dx[static_cast<std::size_t>(i)] = 2.0 * Dy[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)];

  const Mat J = drift_jacobian(m, x);          // J(j, i) = ∂b_j/∂x_i
  const auto Dg = diffusion_gradient(m, x);    // Dg[i](j, k) = ∂D_jk/∂x_i ... indexed by derivative axis
  for (int i = 0; i < d; ++i) {
    double v = 0.0;
    for (int j = 0; j < d; ++j) {
      v -= y[static_cast<std::size_t>(j)] * J(j, i);
      for (int k = 0; k < d; ++k)
        v -= y[static_cast<std::size_t>(j)] * Dg[static_cast<std::size_t>(i)](j, k) *
             y[static_cast<std::size_t>(k)];
    }
    dy[static_cast<std::size_t>(i)] = v;
  }
}

}  // namespace detail

struct PhaseTrajectory {
  std::vector<double> times;
  std::vector<PhaseState> states;
  std::vector<double> energy;   // H along the trajectory
  double energy_drift = 0.0;    // max |H(t) − H(0)|
};

/// Classical RK4 on the characteristic equations. The Hamiltonian is not
/// separable, so drift in H is the accuracy signal and is reported.
inline PhaseTrajectory integrate_hamiltonian(const ModelSpec& m, const PhaseState& s0, double T,
                                             double h, double blowup_bound = 1e8) {
  if (!(h > 0.0) || !(T > 0.0)) throw InvalidParam("integrate_hamiltonian: T and h must be positive");
  const int d = m.dim;
  const long n = static_cast<long>(std::llround(T / h));

  PhaseTrajectory out;
  out.times.reserve(static_cast<std::size_t>(n) + 1);
  out.states.reserve(static_cast<std::size_t>(n) + 1);
  out.energy.reserve(static_cast<std::size_t>(n) + 1);

  Vec x = s0.x, y = s0.y;
  Vec kx1(static_cast<std::size_t>(d)), ky1(static_cast<std::size_t>(d));
  Vec kx2 = kx1, ky2 = ky1, kx3 = kx1, ky3 = ky1, kx4 = kx1, ky4 = ky1;
  const double H0 = hamiltonian(m, s0);

  auto push = [&](double t) {
    out.times.push_back(t);
    out.states.push_back({x, y});
    const double H = hamiltonian(m, {x, y});
    out.energy.push_back(H);
    out.energy_drift = std::max(out.energy_drift, std::fabs(H - H0));
  };
  push(0.0);

  for (long s = 1; s <= n; ++s) {
    detail::hamilton_rhs(m, x, y, kx1, ky1);
    detail::hamilton_rhs(m, x + (0.5 * h) * kx1, y + (0.5 * h) * ky1, kx2, ky2);
    detail::hamilton_rhs(m, x + (0.5 * h) * kx2, y + (0.5 * h) * ky2, kx3, ky3);
    detail::hamilton_rhs(m, x + h * kx3, y + h * ky3, kx4, ky4);
    for (int i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(i);
      x[k] += h / 6.0 * (kx1[k] + 2.0 * kx2[k] + 2.0 * kx3[k] + kx4[k]);
      y[k] += h / 6.0 * (ky1[k] + 2.0 * ky2[k] + 2.0 * ky3[k] + ky4[k]);
    }
    if (norm_inf(x) > blowup_bound || norm_inf(y) > blowup_bound)
      throw BlowUp("hamiltonian trajectory left the bound at t = " + std::to_string(s * h));
    push(static_cast<double>(s) * h);
  }
  return out;
}

/// Canonical form of the Hamiltonian for detailed-balance models:
/// p = y − ½ ∇φ^eq,  H̃(q,p) = pᵀ D(q) p + V(q),
/// V(q) = −¼ [∇φ^eq]ᵀ D ∇φ^eq = −¼ bᵀ D⁻¹ b.
struct CanonicalForm {
  std::function<Vec(const Vec&)> momentum_shift;  // q ↦ ½ ∇φ^eq(q)
  std::function<double(const Vec&)> potential;
  std::function<Vec(const Vec&)> potential_gradient;
};

inline CanonicalForm canonical_transform(const ModelSpec& m,
                                         const Grid* check_grid = nullptr) {
  // Detailed balance required: γ ≡ 0, analytically or on a verification grid.
  if (m.has_circulation()) {
    Grid g = check_grid ? *check_grid : default_validation_grid(m, -2.0, 2.0);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (norm_inf(m.circulation(g.node(i))) > 1e-8)
        throw NotDetailedBalance("model '" + m.name + "' has nonzero circulation");
  } else if (m.has_phi_ss()) {
    Grid g = check_grid ? *check_grid : default_validation_grid(m, -2.0, 2.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec x = g.node(i);
      const Vec gamma = m.drift(x) + matvec(m.diffusion(x), grad_phi_ss(m, x));
      if (norm_inf(gamma) > 1e-8)
        throw NotDetailedBalance("model '" + m.name + "' is not detailed-balance");
    }
  } else {
    throw NotDetailedBalance("model '" + m.name +
                             "' carries no stationary rate function to certify detailed balance");
  }

  ModelSpec copy = m;  // shared into the closures; ModelSpec is immutable
  CanonicalForm out;
  out.momentum_shift = [copy](const Vec& q) { return 0.5 * grad_phi_ss(copy, q); };
  out.potential = [copy](const Vec& q) {
    const Vec b = copy.drift(q);
    return -0.25 * dot(b, solve(copy.diffusion(q), b));
  };
  out.potential_gradient = [copy](const Vec& q) {
    // ∂V/∂x_i = −½ b_j D⁻¹_jk ∂b_k/∂x_i + ¼ (D⁻¹b)_j ∂D_jk/∂x_i (D⁻¹b)_k
    const int d = copy.dim;
    const Vec b = copy.drift(q);
    const Vec Dinv_b = solve(copy.diffusion(q), b);
    const Mat J = drift_jacobian(copy, q);
    const auto Dg = diffusion_gradient(copy, q);
    Vec g(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
      double v = 0.0;
      for (int j = 0; j < d; ++j) {
        v -= 0.5 * Dinv_b[static_cast<std::size_t>(j)] * J(j, i);
        for (int k = 0; k < d; ++k)
          v += 0.25 * Dinv_b[static_cast<std::size_t>(j)] *
               Dg[static_cast<std::size_t>(i)](j, k) * Dinv_b[static_cast<std::size_t>(k)];
      }
      g[static_cast<std::size_t>(i)] = v;
    }
    return g;
  };
  return out;
}

inline double canonical_hamiltonian(const ModelSpec& m, const CanonicalForm& cf, const Vec& q,
                                    const Vec& p) {
  return quad_form(m.diffusion(q), p, p) + cf.potential(q);
}

/// RK4 flow of H̃(q,p); used to check canonical-flow equivalence.
inline PhaseTrajectory integrate_canonical(const ModelSpec& m, const CanonicalForm& cf,
                                           const PhaseState& qp0, double T, double h) {
  if (!(h > 0.0) || !(T > 0.0)) throw InvalidParam("integrate_canonical: T and h must be positive");
  const int d = m.dim;
  const long n = static_cast<long>(std::llround(T / h));

  auto rhs = [&](const Vec& q, const Vec& p, Vec& dq, Vec& dp) {
    dq = 2.0 * matvec(m.diffusion(q), p);
    const auto Dg = diffusion_gradient(m, q);
    const Vec gV = cf.potential_gradient(q);
    for (int i = 0; i < d; ++i) {
      double v = -gV[static_cast<std::size_t>(i)];
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          v -= p[static_cast<std::size_t>(j)] * Dg[static_cast<std::size_t>(i)](j, k) *
               p[static_cast<std::size_t>(k)];
      dp[static_cast<std::size_t>(i)] = v;
    }
  };

  PhaseTrajectory out;
  Vec q = qp0.x, p = qp0.y;
  Vec kq1(static_cast<std::size_t>(d)), kp1(static_cast<std::size_t>(d));
  Vec kq2 = kq1, kp2 = kp1, kq3 = kq1, kp3 = kp1, kq4 = kq1, kp4 = kp1;
  const double H0 = canonical_hamiltonian(m, cf, q, p);
  auto push = [&](double t) {
    out.times.push_back(t);
    out.states.push_back({q, p});
    const double H = canonical_hamiltonian(m, cf, q, p);
    out.energy.push_back(H);
    out.energy_drift = std::max(out.energy_drift, std::fabs(H - H0));
  };
  push(0.0);
  for (long s = 1; s <= n; ++s) {
    rhs(q, p, kq1, kp1);
    rhs(q + (0.5 * h) * kq1, p + (0.5 * h) * kp1, kq2, kp2);
    rhs(q + (0.5 * h) * kq2, p + (0.5 * h) * kp2, kq3, kp3);
    rhs(q + h * kq3, p + h * kp3, kq4, kp4);
    for (int i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(i);
      q[k] += h / 6.0 * (kq1[k] + 2.0 * kq2[k] + 2.0 * kq3[k] + kq4[k]);
      p[k] += h / 6.0 * (kp1[k] + 2.0 * kp2[k] + 2.0 * kp3[k] + kp4[k]);
    }
    push(static_cast<double>(s) * h);
  }
  return out;
}

struct LorentzSplit {
  Vec potential_accel;      // D × (potential-force term)
  double lorentz_power = 0.0;  // ẋ · (both magnetic-like force terms); zero identically
};

/// Force split of the second-order path equation
///   D⁻¹_ij ẍ_j = ½ ∂_i [ b D⁻¹ b − ẋ D⁻¹ ẋ ]                    (potential)
///              + ẋ_k ∂_k (D⁻¹ b)_i − ẋ_j ∂_i (D⁻¹ b)_j          (magnetic 1)
///              − ẋ_k (∂_k D⁻¹_ij) ẋ_j + ẋ_j (∂_i D⁻¹_jk) ẋ_k    (magnetic 2)
/// The magnetic-like terms are antisymmetric in the velocity pairing and do
/// no work, which is what lorentz_power measures.
inline LorentzSplit lorentz_power(const ModelSpec& m, const Vec& x, const Vec& xdot) {
  const int d = m.dim;

  const Mat Dinv = inverse(m.diffusion(x));
  const Vec b = m.drift(x);
  const Vec Dinv_b = matvec(Dinv, b);
  const Mat J = drift_jacobian(m, x);        // J(i, k) = ∂b_i/∂x_k
  const auto Dg = diffusion_gradient(m, x);  // Dg[k] = ∂D/∂x_k

  // ∂_k D⁻¹ = −D⁻¹ (∂_k D) D⁻¹ and ∂_k (D⁻¹ b) = (∂_k D⁻¹) b + D⁻¹ ∂_k b.
  std::vector<Mat> d_dinv(static_cast<std::size_t>(d), Mat(d));
  std::vector<Vec> d_dinvb(static_cast<std::size_t>(d), Vec(static_cast<std::size_t>(d), 0.0));
  for (int k = 0; k < d; ++k) {
    Mat& dM = d_dinv[static_cast<std::size_t>(k)];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double v = 0.0;
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c)
            v -= Dinv(i, r) * Dg[static_cast<std::size_t>(k)](r, c) * Dinv(c, j);
        dM(i, j) = v;
      }
    Vec& df = d_dinvb[static_cast<std::size_t>(k)];
    for (int i = 0; i < d; ++i) {
      double v = 0.0;
      for (int j = 0; j < d; ++j) v += dM(i, j) * b[static_cast<std::size_t>(j)] + Dinv(i, j) * J(j, k);
      df[static_cast<std::size_t>(i)] = v;
    }
  }

  // Potential force ½ ∂_i [ b D⁻¹ b − ẋ D⁻¹ ẋ ] with ẋ held fixed.
  Vec pot_force(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    double v = quad_form(d_dinv[static_cast<std::size_t>(i)], b, b) -
               quad_form(d_dinv[static_cast<std::size_t>(i)], xdot, xdot);
    for (int j = 0; j < d; ++j) v += 2.0 * Dinv_b[static_cast<std::size_t>(j)] * J(j, i);
    pot_force[static_cast<std::size_t>(i)] = 0.5 * v;
  }

  LorentzSplit out;

  double power = 0.0;
  for (int i = 0; i < d; ++i) {
    double mag = 0.0;
    for (int k = 0; k < d; ++k)
      mag += xdot[static_cast<std::size_t>(k)] *
             d_dinvb[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j)
      mag -= xdot[static_cast<std::size_t>(j)] *
             d_dinvb[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j)
        mag -= xdot[static_cast<std::size_t>(k)] * d_dinv[static_cast<std::size_t>(k)](i, j) *
               xdot[static_cast<std::size_t>(j)];
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        mag += xdot[static_cast<std::size_t>(j)] * d_dinv[static_cast<std::size_t>(i)](j, k) *
               xdot[static_cast<std::size_t>(k)];
    power += xdot[static_cast<std::size_t>(i)] * mag;
  }
  out.lorentz_power = power;
  out.potential_accel = matvec(m.diffusion(x), pot_force);
  return out;
}

/// Residual of the Hamilton-Jacobi equation for a gridded rate function:
///   ∂φ/∂t + ∇φᵀ D ∇φ + ∇φᵀ b   (stationary when no time derivative given).
inline ScalarField hje_residual(const ModelSpec& m, const ScalarField& phi,
                                const ScalarField* dphi_dt = nullptr) {
  const VectorField g = gradient(phi);
  ScalarField out;
  out.grid = phi.grid;
  out.values.assign(phi.grid.size(), 0.0);
  out.mask = phi.mask;
  for (std::size_t node = 0; node < phi.grid.size(); ++node) {
    if (!phi.valid(node)) continue;
    const Vec x = phi.grid.node(node);
    const Vec gp = g.at(node);
    double r = quad_form(m.diffusion(x), gp, gp) + dot(gp, m.drift(x));
    if (dphi_dt) r += dphi_dt->values[node];
    out.values[node] = r;
  }
  return out;
}

}  // namespace ldt
