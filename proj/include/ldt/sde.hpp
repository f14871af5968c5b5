#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/linalg.hpp"
#include "ldt/model.hpp"
#include "ldt/rng.hpp"

namespace ldt {

struct EnsembleConfig {
  double epsilon = 0.0;        // noise level; 0 degenerates to the ODE
  double step = 1e-3;          // Euler-Maruyama step h
  double horizon = 1.0;        // total integration time
  int n_paths = 1;
  std::uint64_t seed = 0;
  int record_stride = 1;       // record every stride-th step (plus t = 0)
  double blowup_bound = 1e6;   // any |coordinate| above this aborts the run

  void validate() const {
    if (!(step > 0.0)) throw InvalidParam("ensemble step must be positive");
    if (!(horizon >= step)) throw InvalidParam("ensemble horizon must be at least one step");
    if (epsilon < 0.0) throw InvalidParam("epsilon must be nonnegative");
    if (n_paths < 1) throw InvalidParam("n_paths must be at least 1");
    if (record_stride < 1) throw InvalidParam("record_stride must be at least 1");
  }
};

struct TrajectorySet {
  std::vector<double> times;
  int n_paths = 0;
  int dim = 0;
  std::vector<double> states;  // [path][time][component]
  EnsembleConfig config;

  double state(int path, int t_index, int component) const {
    return states[(static_cast<std::size_t>(path) * times.size() + static_cast<std::size_t>(t_index)) *
                      static_cast<std::size_t>(dim) +
                  static_cast<std::size_t>(component)];
  }

  Vec state_vec(int path, int t_index) const {
    Vec x(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) x[static_cast<std::size_t>(c)] = state(path, t_index, c);
    return x;
  }

  double record_interval() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// Euler-Maruyama ensemble: x ← x + b(x) h + √(2 ε h) L(x) ξ with L Lᵀ = D.
/// One counter-based stream per path keyed by (seed, path index), so the
/// output is reproducible and independent of any parallel schedule.
inline TrajectorySet simulate_ensemble(const ModelSpec& model, const Vec& x0,
                                       const EnsembleConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(x0.size()) != model.dim)
    throw InvalidParam("initial state dimension mismatch");
  if (!all_finite(x0)) throw InvalidParam("initial state must be finite");

  const long n_steps = static_cast<long>(std::llround(cfg.horizon / cfg.step));
  const long n_rec = n_steps / cfg.record_stride + 1;

  TrajectorySet out;
  out.n_paths = cfg.n_paths;
  out.dim = model.dim;
  out.config = cfg;
  out.times.resize(static_cast<std::size_t>(n_rec));
  for (long k = 0; k < n_rec; ++k)
    out.times[static_cast<std::size_t>(k)] = static_cast<double>(k) * cfg.record_stride * cfg.step;
  out.states.assign(static_cast<std::size_t>(cfg.n_paths) * static_cast<std::size_t>(n_rec) *
                        static_cast<std::size_t>(model.dim),
                    0.0);

  const double noise_scale = std::sqrt(2.0 * cfg.epsilon * cfg.step);
  const int d = model.dim;

  for (int p = 0; p < cfg.n_paths; ++p) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(p));
    Vec x = x0;
    Vec xi(static_cast<std::size_t>(d));
    long rec = 0;
    auto record = [&](long k) {
      const std::size_t base = (static_cast<std::size_t>(p) * static_cast<std::size_t>(n_rec) +
                                static_cast<std::size_t>(k)) *
                               static_cast<std::size_t>(d);
      for (int c = 0; c < d; ++c) out.states[base + static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
    };
    record(rec++);
    for (long s = 1; s <= n_steps; ++s) {
      const Vec b = model.drift(x);
      if (cfg.epsilon > 0.0) {
        const Mat L = cholesky(model.diffusion(x));
        for (int c = 0; c < d; ++c) xi[static_cast<std::size_t>(c)] = rng.normal();
        for (int i = 0; i < d; ++i) {
          double noise = 0.0;
          for (int j = 0; j <= i; ++j) noise += L(i, j) * xi[static_cast<std::size_t>(j)];
          x[static_cast<std::size_t>(i)] +=
              b[static_cast<std::size_t>(i)] * cfg.step + noise_scale * noise;
        }
      } else {
        for (int i = 0; i < d; ++i)
          x[static_cast<std::size_t>(i)] += b[static_cast<std::size_t>(i)] * cfg.step;
      }
      for (int i = 0; i < d; ++i)
        if (!(std::fabs(x[static_cast<std::size_t>(i)]) < cfg.blowup_bound))
          throw BlowUp("path " + std::to_string(p) + " left the bound " +
                       std::to_string(cfg.blowup_bound) + " at t = " +
                       std::to_string(static_cast<double>(s) * cfg.step));
      if (s % cfg.record_stride == 0) record(rec++);
    }
  }
  return out;
}

struct MomentStats {
  Vec mean_velocity;
  Mat cov_velocity;
  Vec mean_momentum;
  Mat cov_momentum;
  std::size_t samples = 0;
};

/// Sample moments of the coarse-grained velocity Δx/Δt and of the conjugate
/// momentum y = ½ D⁻¹(center) (Δx/Δt − b(center)), over all recorded
/// increments of length delta_t whose start point lies within radius of
/// center. Moment sums use pairwise summation so the result is independent
/// of accumulation order.
inline MomentStats velocity_stats(const ModelSpec& model, const TrajectorySet& traj,
                                  const Vec& center, double radius, double delta_t) {
  const double rec = traj.record_interval();
  if (rec <= 0.0) throw InvalidParam("trajectory has fewer than two recorded instants");
  if (!(traj.config.step <= delta_t / 10.0 + 1e-15))
    throw InvalidParam("delta_t must be at least 10 integrator steps (h <= delta_t/10)");
  const double ratio = delta_t / rec;
  const long lag = static_cast<long>(std::llround(ratio));
  if (lag < 1 || std::fabs(ratio - static_cast<double>(lag)) > 1e-9)
    throw InvalidParam("delta_t must be an integer multiple of the recording interval");

  const int d = traj.dim;
  const Mat Dinv = inverse(model.diffusion(center));
  const Vec b_center = model.drift(center);

  std::vector<std::vector<double>> vel(static_cast<std::size_t>(d));
  for (int p = 0; p < traj.n_paths; ++p) {
    for (std::size_t k = 0; k + static_cast<std::size_t>(lag) < traj.times.size(); ++k) {
      const Vec xs = traj.state_vec(p, static_cast<int>(k));
      if (norm2(xs - center) > radius) continue;
      const Vec xe = traj.state_vec(p, static_cast<int>(k + static_cast<std::size_t>(lag)));
      for (int c = 0; c < d; ++c)
        vel[static_cast<std::size_t>(c)].push_back(
            (xe[static_cast<std::size_t>(c)] - xs[static_cast<std::size_t>(c)]) / delta_t);
    }
  }
  const std::size_t n = vel[0].size();
  if (n < 100)
    throw InsufficientSamples("only " + std::to_string(n) +
                              " qualifying increments (need at least 100)");

  MomentStats s;
  s.samples = n;
  s.mean_velocity.assign(static_cast<std::size_t>(d), 0.0);
  for (int c = 0; c < d; ++c)
    s.mean_velocity[static_cast<std::size_t>(c)] =
        pairwise_sum(vel[static_cast<std::size_t>(c)]) / static_cast<double>(n);

  s.cov_velocity = Mat(d);
  std::vector<double> prod(n);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      for (std::size_t k = 0; k < n; ++k)
        prod[k] = (vel[static_cast<std::size_t>(i)][k] - s.mean_velocity[static_cast<std::size_t>(i)]) *
                  (vel[static_cast<std::size_t>(j)][k] - s.mean_velocity[static_cast<std::size_t>(j)]);
      const double c = pairwise_sum(prod) / static_cast<double>(n - 1);
      s.cov_velocity(i, j) = c;
      s.cov_velocity(j, i) = c;
    }
  }

  // y is an affine image of the velocity, so its moments follow exactly.
  Vec shifted(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c)
    shifted[static_cast<std::size_t>(c)] =
        s.mean_velocity[static_cast<std::size_t>(c)] - b_center[static_cast<std::size_t>(c)];
  s.mean_momentum = 0.5 * matvec(Dinv, shifted);
  s.cov_momentum = Mat(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) acc += Dinv(i, k) * s.cov_velocity(k, l) * Dinv(l, j);
      s.cov_momentum(i, j) = 0.25 * acc;
    }
  return s;
}

}  // namespace ldt
