#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <utility>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/hamjac.hpp"
#include "ldt/linalg.hpp"
#include "ldt/model.hpp"

namespace ldt {

/// Uniformly sampled path in state space; endpoints stay pinned during
/// minimization.
struct DiscretePath {
  std::vector<double> times;
  std::vector<Vec> nodes;

  double tau() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  int segments() const { return static_cast<int>(nodes.size()) - 1; }
};

inline DiscretePath linear_path(const Vec& a, const Vec& b, double T, int N) {
  if (N < 1) throw InvalidParam("path needs at least one segment");
  DiscretePath p;
  p.times.resize(static_cast<std::size_t>(N) + 1);
  p.nodes.resize(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) {
    const double s = static_cast<double>(k) / N;
    p.times[static_cast<std::size_t>(k)] = s * T;
    Vec x(a.size());
    for (std::size_t c = 0; c < a.size(); ++c) x[c] = (1.0 - s) * a[c] + s * b[c];
    p.nodes[static_cast<std::size_t>(k)] = std::move(x);
  }
  return p;
}

/// Discrete action: per segment the velocity is the difference quotient and
/// the Lagrangian is averaged over the segment's two endpoints (trapezoid in
/// time, second order on smooth paths).
inline double path_action(const ModelSpec& m, const DiscretePath& path) {
  const double tau = path.tau();
  if (!(tau > 0.0)) throw InvalidParam("path needs a positive time step");
  double action = 0.0;
  for (int k = 0; k < path.segments(); ++k) {
    const Vec& xl = path.nodes[static_cast<std::size_t>(k)];
    const Vec& xr = path.nodes[static_cast<std::size_t>(k) + 1];
    const Vec v = (1.0 / tau) * (xr - xl);
    action += 0.5 * tau * (lagrangian(m, xl, v).value + lagrangian(m, xr, v).value);
  }
  return action;
}

namespace detail {

/// ∂L/∂x at fixed velocity: −½ Jᵀ D⁻¹ (v−b) + ¼ (v−b)ᵀ (∂D⁻¹/∂x_i) (v−b).
inline Vec lagrangian_x_gradient(const ModelSpec& m, const Vec& x, const Vec& v) {
  const int d = m.dim;
  const Vec r = v - m.drift(x);
  const Mat Dinv = inverse(m.diffusion(x));
  const Vec Dinv_r = matvec(Dinv, r);
  const Mat J = drift_jacobian(m, x);
  const auto Dg = diffusion_gradient(m, x);
  Vec g(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    double val = 0.0;
    for (int j = 0; j < d; ++j) val -= 0.5 * Dinv_r[static_cast<std::size_t>(j)] * J(j, i);
    // ∂D⁻¹/∂x_i = −D⁻¹ (∂D/∂x_i) D⁻¹ contracted twice with (v−b).
    double dq = 0.0;
    for (int r1 = 0; r1 < d; ++r1)
      for (int c1 = 0; c1 < d; ++c1)
        dq += Dinv_r[static_cast<std::size_t>(r1)] * Dg[static_cast<std::size_t>(i)](r1, c1) *
              Dinv_r[static_cast<std::size_t>(c1)];
    val -= 0.25 * dq;
    g[static_cast<std::size_t>(i)] = val;
  }
  return g;
}

struct ActionProblem {
  const ModelSpec& model;
  Vec x0, x1;
  double tau;
  int n_interior;
  int dim;

  std::size_t size() const {
    return static_cast<std::size_t>(n_interior) * static_cast<std::size_t>(dim);
  }

  Vec node(const std::vector<double>& z, int k) const {
    // k runs over 0..N with pinned endpoints.
    if (k == 0) return x0;
    if (k == n_interior + 1) return x1;
    Vec x(static_cast<std::size_t>(dim));
    const std::size_t base = static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(dim);
    for (int c = 0; c < dim; ++c) x[static_cast<std::size_t>(c)] = z[base + static_cast<std::size_t>(c)];
    return x;
  }

  /// Action and its analytic gradient with respect to the interior nodes.
  double eval(const std::vector<double>& z, std::vector<double>& grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    double action = 0.0;
    const int n_seg = n_interior + 1;
    for (int k = 0; k < n_seg; ++k) {
      const Vec xl = node(z, k);
      const Vec xr = node(z, k + 1);
      const Vec v = (1.0 / tau) * (xr - xl);
      const auto Ll = lagrangian(model, xl, v);
      const auto Lr = lagrangian(model, xr, v);
      action += 0.5 * tau * (Ll.value + Lr.value);

      // d/dv of the segment contribution, then chain rule to the two nodes.
      const Vec dLdv = Ll.momentum + Lr.momentum;  // ∂L/∂v = y at each endpoint
      const Vec gxl = lagrangian_x_gradient(model, xl, v);
      const Vec gxr = lagrangian_x_gradient(model, xr, v);
      for (int c = 0; c < dim; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        const double dv = 0.5 * dLdv[cc];  // τ · ½ · (1/τ)
        if (k > 0) {
          const std::size_t il = static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(dim) + cc;
          grad[il] += 0.5 * tau * gxl[cc] - dv;
        }
        if (k + 1 <= n_interior) {
          const std::size_t ir = static_cast<std::size_t>(k) * static_cast<std::size_t>(dim) + cc;
          grad[ir] += 0.5 * tau * gxr[cc] + dv;
        }
      }
    }
    return action;
  }
};

/// Limited-memory BFGS with Armijo backtracking on the stacked interior
/// nodes. The problem is smooth and medium-dimensional, so this converges
/// in a few hundred iterations on the models of interest.
struct LbfgsOutcome {
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

template <class Objective>
LbfgsOutcome lbfgs_minimize(Objective&& objective, std::vector<double>& z, double grad_tol,
                            int max_iters, int memory = 10) {
  const std::size_t n = z.size();
  std::vector<double> grad(n), grad_new(n), direction(n), z_new(n);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  double f = objective(z, grad);
  LbfgsOutcome out;
  for (int iter = 0; iter < max_iters; ++iter) {
    out.iterations = iter;
    out.value = f;
    out.grad_norm = 0.0;
    for (double g : grad) out.grad_norm = std::max(out.grad_norm, std::fabs(g));
    if (out.grad_norm <= grad_tol) {
      out.converged = true;
      return out;
    }

    // Two-loop recursion.
    direction = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      double a = 0.0;
      for (std::size_t k = 0; k < n; ++k) a += s_hist[i][k] * direction[k];
      a *= rho_hist[i];
      alpha[i] = a;
      for (std::size_t k = 0; k < n; ++k) direction[k] -= a * y_hist[i][k];
    }
    if (!s_hist.empty()) {
      double sy = 0.0, yy = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        sy += s_hist.back()[k] * y_hist.back()[k];
        yy += y_hist.back()[k] * y_hist.back()[k];
      }
      const double scale = sy / std::max(yy, 1e-300);
      for (double& v : direction) v *= scale;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double b = 0.0;
      for (std::size_t k = 0; k < n; ++k) b += y_hist[i][k] * direction[k];
      b *= rho_hist[i];
      for (std::size_t k = 0; k < n; ++k) direction[k] += (alpha[i] - b) * s_hist[i][k];
    }
    for (double& v : direction) v = -v;

    double dir_dot_grad = 0.0;
    for (std::size_t k = 0; k < n; ++k) dir_dot_grad += direction[k] * grad[k];
    if (dir_dot_grad >= 0.0) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir_dot_grad = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        direction[k] = -grad[k];
        dir_dot_grad -= grad[k] * grad[k];
      }
    }

    // Armijo backtracking, with a roundoff allowance so the search does not
    // report failure once decrements fall below double precision.
    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t k = 0; k < n; ++k) z_new[k] = z[k] + step * direction[k];
      f_new = objective(z_new, grad_new);
      if (std::isfinite(f_new) &&
          f_new <= f + 1e-4 * step * dir_dot_grad + 1e-15 * (1.0 + std::fabs(f))) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No representable descent left; treat near-zero gradients as done.
      out.converged = out.grad_norm <= 100.0 * grad_tol;
      return out;
    }

    std::vector<double> s_vec(n), y_vec(n);
    double sy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      s_vec[k] = z_new[k] - z[k];
      y_vec[k] = grad_new[k] - grad[k];
      sy += s_vec[k] * y_vec[k];
    }
    if (sy > 1e-12 * norm2(s_vec) * norm2(y_vec)) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    z.swap(z_new);
    grad.swap(grad_new);
    f = f_new;
  }
  out.value = f;
  return out;
}

}  // namespace detail

struct ActionResult {
  DiscretePath path;
  double action = 0.0;
  double el_residual = 0.0;  // max stationarity residual over interior nodes
  bool converged = false;
  int iterations = 0;
};

struct MinimizeOptions {
  int max_iters = 4000;
  double grad_tol = 1e-10;
};

/// Two-point minimization with pinned endpoints; the initial path is the
/// straight line, so ties between local minima go to the basin it starts in.
inline ActionResult minimize_action(const ModelSpec& m, const Vec& x0, const Vec& x1, double T,
                                    int N, const MinimizeOptions& opts = {}) {
  if (N < 8) throw InvalidParam("minimize_action: need N >= 8 segments");
  if (!(T > 0.0)) throw InvalidParam("minimize_action: T must be positive");

  DiscretePath init = linear_path(x0, x1, T, N);
  detail::ActionProblem prob{m, x0, x1, T / N, N - 1, m.dim};
  std::vector<double> z(prob.size());
  for (int k = 1; k < N; ++k)
    for (int c = 0; c < m.dim; ++c)
      z[static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(m.dim) + static_cast<std::size_t>(c)] =
          init.nodes[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];

  auto objective = [&prob](const std::vector<double>& zz, std::vector<double>& grad) {
    return prob.eval(zz, grad);
  };
  auto outcome = detail::lbfgs_minimize(objective, z, opts.grad_tol, opts.max_iters);

  ActionResult res;
  res.converged = outcome.converged;
  res.iterations = outcome.iterations;
  res.path = init;
  for (int k = 1; k < N; ++k)
    res.path.nodes[static_cast<std::size_t>(k)] = prob.node(z, k);
  res.action = path_action(m, res.path);
  // Euler-Lagrange residual on the τ-scale of the continuous equation.
  res.el_residual = outcome.grad_norm / prob.tau;
  return res;
}

struct QuasipotentialOptions {
  double t_max = 64.0;          // geometric horizon schedule 1, 2, 4, ..., t_max
  double rel_tol = 1e-3;        // plateau detection on successive horizon values
  int nodes_per_unit_time = 64; // keeps τ fixed across the schedule
  MinimizeOptions minimize;
};

struct QuasipotentialResult {
  double value = 0.0;
  DiscretePath path;
  double horizon = 0.0;
  std::vector<std::pair<double, double>> schedule;  // (T, min action)
  bool converged = false;
};

/// Quasipotential as the infimum of the two-point action over growing
/// horizons, anchored at a stable fixed point of the drift.
inline QuasipotentialResult quasipotential(const ModelSpec& m, const Vec& x_attr,
                                           const Vec& x_target,
                                           const QuasipotentialOptions& opts = {}) {
  if (norm_inf(m.drift(x_attr)) > 1e-8)
    throw InvalidParam("quasipotential: x_attr is not a fixed point of the drift");
  {
    const Mat J = drift_jacobian(m, x_attr);
    bool stable;
    if (J.n == 1) {
      stable = J(0, 0) < 0.0;
    } else if (J.n == 2) {
      stable = (J(0, 0) + J(1, 1) < 0.0) && (J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0) > 0.0);
    } else {
      // Sufficient condition: negative-definite symmetric part.
      Mat sym(J.n);
      for (int i = 0; i < J.n; ++i)
        for (int j = 0; j < J.n; ++j) sym(i, j) = 0.5 * (J(i, j) + J(j, i));
      stable = sym_eigenvalues(sym).back() < 0.0;
    }
    if (!stable) throw InvalidParam("quasipotential: x_attr is not linearly stable");
  }

  QuasipotentialResult out;
  double best = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  for (double T = 1.0; T <= opts.t_max * (1.0 + 1e-12); T *= 2.0) {
    const int N = std::max(8, static_cast<int>(std::lround(opts.nodes_per_unit_time * T)));
    const ActionResult r = minimize_action(m, x_attr, x_target, T, N, opts.minimize);
    out.schedule.emplace_back(T, r.action);
    if (r.action < best) {
      best = r.action;
      out.path = r.path;
      out.horizon = T;
    }
    if (std::isfinite(prev) &&
        std::fabs(prev - r.action) < opts.rel_tol * std::max(1e-12, std::fabs(r.action))) {
      out.converged = true;
      break;
    }
    prev = r.action;
  }
  if (!out.converged && out.schedule.size() < 2)
    throw NoConvergence("quasipotential: horizon schedule exhausted");
  out.value = best;
  return out;
}

}  // namespace ldt
