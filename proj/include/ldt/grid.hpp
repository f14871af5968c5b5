#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/linalg.hpp"

namespace ldt {

/// Uniform tensor-product grid. Nodes sit at cell centers, so a density
/// summed as Σ value · cell_volume() is an exact Riemann sum over the box.
struct Grid {
  Vec lo, hi;
  std::vector<int> shape;  // nodes per axis

  static Grid uniform(Vec lower, Vec upper, std::vector<int> nodes) {
    if (lower.size() != upper.size() || lower.size() != nodes.size())
      throw InvalidParam("grid: axis count mismatch");
    for (std::size_t a = 0; a < lower.size(); ++a) {
      if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]))
        throw InvalidParam("grid: bounds must be finite");
      if (nodes[a] < 3) throw InvalidParam("grid: need at least 3 nodes per axis");
      if (!(upper[a] > lower[a])) throw InvalidParam("grid: upper bound must exceed lower");
    }
    Grid g;
    g.lo = std::move(lower);
    g.hi = std::move(upper);
    g.shape = std::move(nodes);
    return g;
  }

  int dim() const { return static_cast<int>(shape.size()); }

  double spacing(int axis) const {
    return (hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]) /
           shape[static_cast<std::size_t>(axis)];
  }

  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim(); ++a) v *= spacing(a);
    return v;
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (int n : shape) s *= static_cast<std::size_t>(n);
    return s;
  }

  std::size_t flatten(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < dim(); ++a)
      f = f * static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]) +
          static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
    return f;
  }

  std::vector<int> unflatten(std::size_t flat) const {
    std::vector<int> idx(static_cast<std::size_t>(dim()));
    for (int a = dim() - 1; a >= 0; --a) {
      const auto n = static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
      idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % n);
      flat /= n;
    }
    return idx;
  }

  double coord(int axis, int i) const {
    return lo[static_cast<std::size_t>(axis)] + (i + 0.5) * spacing(axis);
  }

  Vec node(std::size_t flat) const {
    const auto idx = unflatten(flat);
    Vec x(static_cast<std::size_t>(dim()));
    for (int a = 0; a < dim(); ++a) x[static_cast<std::size_t>(a)] = coord(a, idx[static_cast<std::size_t>(a)]);
    return x;
  }

  /// Cell index along an axis, or -1 if outside the box.
  int locate(int axis, double x) const {
    const double t = (x - lo[static_cast<std::size_t>(axis)]) / spacing(axis);
    if (t < 0.0 || t >= shape[static_cast<std::size_t>(axis)]) return -1;
    return static_cast<int>(t);
  }

  bool contains(const Vec& x) const {
    for (int a = 0; a < dim(); ++a)
      if (locate(a, x[static_cast<std::size_t>(a)]) < 0) return false;
    return true;
  }
};

/// Scalar values per grid node. An empty mask means "all nodes valid".
struct ScalarField {
  Grid grid;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  bool valid(std::size_t i) const { return mask.empty() || mask[i] != 0; }
};

/// One dim()-vector per node, stored node-major.
struct VectorField {
  Grid grid;
  std::vector<double> values;  // size() * dim()

  Vec at(std::size_t node) const {
    const int d = grid.dim();
    Vec v(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a)
      v[static_cast<std::size_t>(a)] = values[node * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)];
    return v;
  }
};

/// Gradient by second-order differences: central in the interior and
/// 3-point one-sided at the box faces (exact for quadratics everywhere).
inline VectorField gradient(const ScalarField& f) {
  const Grid& g = f.grid;
  const int d = g.dim();
  VectorField out;
  out.grid = g;
  out.values.assign(g.size() * static_cast<std::size_t>(d), 0.0);
  for (std::size_t node = 0; node < g.size(); ++node) {
    auto idx = g.unflatten(node);
    for (int a = 0; a < d; ++a) {
      const int i = idx[static_cast<std::size_t>(a)];
      const int n = g.shape[static_cast<std::size_t>(a)];
      const double h = g.spacing(a);
      auto value_at = [&](int j) {
        auto shifted = idx;
        shifted[static_cast<std::size_t>(a)] = j;
        return f.values[g.flatten(shifted)];
      };
      double dv;
      if (i == 0)
        dv = (-3.0 * value_at(0) + 4.0 * value_at(1) - value_at(2)) / (2.0 * h);
      else if (i == n - 1)
        dv = (3.0 * value_at(n - 1) - 4.0 * value_at(n - 2) + value_at(n - 3)) / (2.0 * h);
      else
        dv = (value_at(i + 1) - value_at(i - 1)) / (2.0 * h);
      out.values[node * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = dv;
    }
  }
  return out;
}

/// Multilinear interpolation of a scalar field at an arbitrary point.
/// Clamps to the node hull so gradients of interpolants stay usable
/// right up to the box faces.
inline double interpolate(const ScalarField& f, const Vec& x) {
  const Grid& g = f.grid;
  const int d = g.dim();
  std::vector<int> base(static_cast<std::size_t>(d));
  std::vector<double> w(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const double t = (x[static_cast<std::size_t>(a)] - g.coord(a, 0)) / g.spacing(a);
    const int n = g.shape[static_cast<std::size_t>(a)];
    double tc = std::min(std::max(t, 0.0), static_cast<double>(n - 1));
    int i = static_cast<int>(tc);
    if (i > n - 2) i = n - 2;
    base[static_cast<std::size_t>(a)] = i;
    w[static_cast<std::size_t>(a)] = tc - i;
  }
  double acc = 0.0;
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::vector<int> idx = base;
    for (int a = 0; a < d; ++a) {
      const bool high = (c >> a) & 1;
      weight *= high ? w[static_cast<std::size_t>(a)] : 1.0 - w[static_cast<std::size_t>(a)];
      if (high) idx[static_cast<std::size_t>(a)] += 1;
    }
    acc += weight * f.values[g.flatten(idx)];
  }
  return acc;
}

inline Vec interpolate(const VectorField& f, const Vec& x) {
  const Grid& g = f.grid;
  const int d = g.dim();
  std::vector<int> base(static_cast<std::size_t>(d));
  std::vector<double> w(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const double t = (x[static_cast<std::size_t>(a)] - g.coord(a, 0)) / g.spacing(a);
    const int n = g.shape[static_cast<std::size_t>(a)];
    double tc = std::min(std::max(t, 0.0), static_cast<double>(n - 1));
    int i = static_cast<int>(tc);
    if (i > n - 2) i = n - 2;
    base[static_cast<std::size_t>(a)] = i;
    w[static_cast<std::size_t>(a)] = tc - i;
  }
  Vec out(static_cast<std::size_t>(d), 0.0);
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::vector<int> idx = base;
    for (int a = 0; a < d; ++a) {
      const bool high = (c >> a) & 1;
      weight *= high ? w[static_cast<std::size_t>(a)] : 1.0 - w[static_cast<std::size_t>(a)];
      if (high) idx[static_cast<std::size_t>(a)] += 1;
    }
    const std::size_t node = g.flatten(idx);
    for (int a = 0; a < d; ++a)
      out[static_cast<std::size_t>(a)] +=
          weight * f.values[node * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)];
  }
  return out;
}

}  // namespace ldt
