#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/grid.hpp"
#include "ldt/sde.hpp"

namespace ldt {

/// Gridded probability density tagged with the noise level it was made at.
struct DensityEstimate {
  Grid grid;
  std::vector<double> values;
  double epsilon = 0.0;
  double time = 0.0;

  double mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_volume();
  }
};

/// Fixed-grid histogram with cell-volume normalization. Counts are integers,
/// so the estimate is independent of sample accumulation order. Samples
/// outside the box are dropped (and reported via the return's mass < 1).
struct HistogramResult {
  DensityEstimate density;
  std::vector<std::int64_t> counts;
  std::int64_t total_samples = 0;  // includes out-of-box samples
};

inline HistogramResult histogram_density(const std::vector<Vec>& samples, const Grid& grid,
                                         double epsilon, double time = 0.0) {
  HistogramResult out;
  out.counts.assign(grid.size(), 0);
  out.total_samples = static_cast<std::int64_t>(samples.size());
  std::int64_t inside = 0;
  std::vector<int> idx(static_cast<std::size_t>(grid.dim()));
  for (const Vec& x : samples) {
    bool ok = true;
    for (int a = 0; a < grid.dim(); ++a) {
      const int i = grid.locate(a, x[static_cast<std::size_t>(a)]);
      if (i < 0) {
        ok = false;
        break;
      }
      idx[static_cast<std::size_t>(a)] = i;
    }
    if (!ok) continue;
    ++out.counts[grid.flatten(idx)];
    ++inside;
  }
  out.density.grid = grid;
  out.density.epsilon = epsilon;
  out.density.time = time;
  out.density.values.assign(grid.size(), 0.0);
  if (inside > 0) {
    const double norm = 1.0 / (static_cast<double>(inside) * grid.cell_volume());
    for (std::size_t i = 0; i < grid.size(); ++i)
      out.density.values[i] = static_cast<double>(out.counts[i]) * norm;
  }
  return out;
}

/// Pool recorded states with t >= t_min across all paths into a histogram.
inline HistogramResult histogram_density(const TrajectorySet& traj, const Grid& grid,
                                         double t_min = 0.0) {
  std::vector<Vec> samples;
  for (int p = 0; p < traj.n_paths; ++p)
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      if (traj.times[k] >= t_min) samples.push_back(traj.state_vec(p, static_cast<int>(k)));
  return histogram_density(samples, grid, traj.config.epsilon,
                           traj.times.empty() ? 0.0 : traj.times.back());
}

/// Empirical large-deviations rate function: φ̂ = −ε ln p̂, shift-normalized
/// to minimum zero over the supported nodes. Nodes with no mass are masked,
/// not extrapolated.
inline ScalarField empirical_ldrf(const DensityEstimate& density) {
  ScalarField phi;
  phi.grid = density.grid;
  phi.values.assign(density.grid.size(), 0.0);
  phi.mask.assign(density.grid.size(), 0);
  double min_phi = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < density.values.size(); ++i) {
    if (density.values[i] > 0.0) {
      phi.mask[i] = 1;
      phi.values[i] = -density.epsilon * std::log(density.values[i]);
      min_phi = std::min(min_phi, phi.values[i]);
      any = true;
    }
  }
  if (!any) throw EmptySupport("density has no supported nodes");
  for (std::size_t i = 0; i < phi.values.size(); ++i)
    if (phi.mask[i]) phi.values[i] -= min_phi;
  return phi;
}

/// Density proportional to exp(-q/epsilon) for a callable q, normalized on
/// the grid. Used to feed analytic references through the same gridded
/// machinery as estimated densities.
template <class F>
DensityEstimate density_from_rate(const Grid& grid, double epsilon, F&& rate) {
  DensityEstimate d;
  d.grid = grid;
  d.epsilon = epsilon;
  d.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) d.values[i] = std::exp(-rate(grid.node(i)) / epsilon);
  double z = 0.0;
  for (double v : d.values) z += v;
  z *= grid.cell_volume();
  for (double& v : d.values) v /= z;
  return d;
}

}  // namespace ldt
