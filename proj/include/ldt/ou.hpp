#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/hamjac.hpp"

namespace ldt::ou {

/// Parameters of the one-dimensional process dx = −b x dt + √(2εD) dB.
struct OUParams {
  double b = 1.0;
  double D = 1.0;

  void validate() const {
    if (!(b > 0.0)) throw InvalidParam("ou: relaxation rate b must be positive");
    if (!(D > 0.0)) throw InvalidParam("ou: diffusion D must be positive");
  }
};

/// Variance of the transition kernel after time t.
inline double kernel_variance(const OUParams& p, double epsilon, double t) {
  return epsilon * p.D / p.b * (1.0 - std::exp(-2.0 * p.b * t));
}

/// Exponent and prefactor of the exact kernel, kept separate so tests can
/// split the O(1/ε) rate from the O(ln ε) prefactor exactly.
struct TransitionParts {
  double rate = 0.0;            // b (x − x' e^{−bt})² / (2D(1 − e^{−2bt}))
  double log_prefactor = 0.0;   // ½ ln [ b / (2πεD(1 − e^{−2bt})) ]
};

inline TransitionParts transition_parts(const OUParams& p, double epsilon, double x, double t,
                                        double x_prime) {
  p.validate();
  if (!(t > 0.0)) throw InvalidParam("ou transition: t must be positive");
  TransitionParts parts;
  const double decay = std::exp(-p.b * t);
  const double denom = 2.0 * p.D / p.b * (1.0 - decay * decay);
  const double dev = x - x_prime * decay;
  parts.rate = dev * dev / denom;
  parts.log_prefactor = -0.5 * std::log(3.14159265358979323846 * epsilon * denom);
  return parts;
}

/// Exact transition density value: Gaussian with mean x' e^{−bt} and
/// variance εD(1 − e^{−2bt})/b.
inline double transition(const OUParams& p, double epsilon, double x, double t, double x_prime) {
  const auto parts = transition_parts(p, epsilon, x, t, x_prime);
  return std::exp(parts.log_prefactor - parts.rate / epsilon);
}

struct Rates {
  double phi_ss = 0.0;                       // b x² / (2D)
  double phi_eit = 0.0;                      // b x² / (2D) + Δt D y²
  std::optional<double> finite_time;         // kernel exponent at (x', t)
};

inline Rates rate_functions(const OUParams& p, double x, double y, double delta_t,
                            std::optional<double> t = std::nullopt,
                            std::optional<double> x_prime = std::nullopt) {
  p.validate();
  Rates r;
  r.phi_ss = p.b * x * x / (2.0 * p.D);
  r.phi_eit = r.phi_ss + delta_t * p.D * y * y;
  if (t && x_prime) r.finite_time = transition_parts(p, 1.0, x, *t, *x_prime).rate;
  return r;
}

enum class LimitOrder { EpsilonFirst, SigmaFirst };

/// Spec of the double limit ε, σ → 0 for a Gaussian initial condition of
/// width σ centered at x'.
struct DoubleLimitSpec {
  double sigma = 0.0;
  double epsilon = 0.0;
  double x_prime = 0.0;
  double x = 0.0;
  double t = 1.0;
  LimitOrder order = LimitOrder::EpsilonFirst;
};

/// Markovian variance θ²(t) = εD(1 − e^{−2bt})/b.
inline double markov_variance(const OUParams& p, double epsilon, double t) {
  return kernel_variance(p, epsilon, t);
}

/// Total variance Ξ(t) = σ² e^{−2bt} + θ²(t).
inline double total_variance(const OUParams& p, const DoubleLimitSpec& s) {
  const double decay2 = std::exp(-2.0 * p.b * s.t);
  return s.sigma * s.sigma * decay2 + markov_variance(p, s.epsilon, s.t);
}

/// −ε ln p at finite (ε, σ): ε(x−μ)²/(2Ξ) + (ε/2) ln(2πΞ) with μ = x'e^{−bt}.
inline double wkb_value(const OUParams& p, const DoubleLimitSpec& s) {
  if (!(s.t > 0.0)) throw InvalidParam("ou double limit: t must be positive");
  const double mu = s.x_prime * std::exp(-p.b * s.t);
  const double xi = total_variance(p, s);
  const double dev = s.x - mu;
  return s.epsilon * dev * dev / (2.0 * xi) +
         0.5 * s.epsilon * std::log(2.0 * 3.14159265358979323846 * xi);
}

/// The iterated limits disagree: ε before σ kills the exponent entirely,
/// σ before ε leaves the kernel exponent. Both closed forms are returned
/// exactly, not by numerical continuation.
inline double double_limit(const OUParams& p, const DoubleLimitSpec& s) {
  p.validate();
  if (!(s.t > 0.0)) throw InvalidParam("ou double limit: t must be positive");
  if (s.order == LimitOrder::EpsilonFirst) return 0.0;
  return transition_parts(p, 1.0, s.x, s.t, s.x_prime).rate;
}

enum class ReferenceKind { Hamiltonian, Eit };

/// Closed-form reference trajectories of the two phase-space extensions of
/// dx/dt = −bx. The conservative one has y(t) = y₀ e^{bt}; the dissipative
/// one is the 2×2 linear system solved by its matrix exponential. Their
/// momenta grow and decay respectively, which is the opposite-reversibility
/// signature.
inline PhaseTrajectory reference_dynamics(const OUParams& p, ReferenceKind kind,
                                          const PhaseState& s0, std::optional<double> delta_t,
                                          double T, double sample_h = 1e-2) {
  p.validate();
  if (!(T > 0.0) || !(sample_h > 0.0))
    throw InvalidParam("ou reference dynamics: T and sample_h must be positive");
  if (kind == ReferenceKind::Eit && !delta_t)
    throw InvalidParam("ou reference dynamics: eit kind needs delta_t");
  const long n = static_cast<long>(std::llround(T / sample_h));
  PhaseTrajectory out;
  const double x0 = s0.x[0], y0 = s0.y[0];

  auto push = [&](double t, double x, double y) {
    out.times.push_back(t);
    out.states.push_back({Vec{x}, Vec{y}});
    const double H = p.D * y * y - p.b * x * y;
    out.energy.push_back(H);
  };

  if (kind == ReferenceKind::Hamiltonian) {
    // dx/dt = 2Dy − bx, dy/dt = by:
    //   y(t) = y₀ e^{bt},  x(t) = x₀ e^{−bt} + (D y₀ / b)(e^{bt} − e^{−bt}).
    for (long k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) * sample_h;
      const double eb = std::exp(p.b * t), emb = std::exp(-p.b * t);
      const double y = y0 * eb;
      const double x = x0 * emb + p.D * y0 / p.b * (eb - emb);
      push(t, x, y);
    }
  } else {
    // d/dt (x, y) = M (x, y), M = [[−b, 2D], [−b/(ΔtD), −b/2]].
    const double dt_res = *delta_t;
    const double m00 = -p.b, m01 = 2.0 * p.D;
    const double m10 = -p.b / (dt_res * p.D), m11 = -0.5 * p.b;
    const double tr = m00 + m11, det = m00 * m11 - m01 * m10;
    const double half_tr = 0.5 * tr;
    const double disc = half_tr * half_tr - det;
    for (long k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) * sample_h;
      // exp(Mt) = e^{μt} [cosh(ωt) I + sinh(ωt)/ω (M − μI)], μ = tr/2,
      // with the cos/sinc branch when the discriminant is negative.
      double c, s_over_w;
      if (disc > 1e-14) {
        const double w = std::sqrt(disc);
        c = std::cosh(w * t);
        s_over_w = std::sinh(w * t) / w;
      } else if (disc < -1e-14) {
        const double w = std::sqrt(-disc);
        c = std::cos(w * t);
        s_over_w = w * t == 0.0 ? t : std::sin(w * t) / w;
      } else {
        c = 1.0;
        s_over_w = t;
      }
      const double e = std::exp(half_tr * t);
      const double a00 = e * (c + s_over_w * (m00 - half_tr));
      const double a01 = e * s_over_w * m01;
      const double a10 = e * s_over_w * m10;
      const double a11 = e * (c + s_over_w * (m11 - half_tr));
      push(t, a00 * x0 + a01 * y0, a10 * x0 + a11 * y0);
    }
  }
  const double H0 = out.energy.front();
  for (double H : out.energy) out.energy_drift = std::max(out.energy_drift, std::fabs(H - H0));
  return out;
}

/// Stationary density value, Gaussian with variance εD/b.
inline double stationary_density(const OUParams& p, double epsilon, double x) {
  p.validate();
  const double var = epsilon * p.D / p.b;
  return std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * 3.14159265358979323846 * var);
}

}  // namespace ldt::ou
