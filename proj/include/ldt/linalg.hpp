#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ldt/errors.hpp"

namespace ldt {

using Vec = std::vector<double>;

/// Dense square matrix, row-major. Dimensions here are the state-space
/// dimension (1..3 in practice), so no effort is spent on blocking.
struct Mat {
  int n = 0;
  std::vector<double> a;

  Mat() = default;
  explicit Mat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

  static Mat identity(int dim) {
    Mat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diagonal(const Vec& d) {
    Mat m(static_cast<int>(d.size()));
    for (int i = 0; i < m.n; ++i) m(i, i) = d[static_cast<std::size_t>(i)];
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

inline Vec operator+(const Vec& u, const Vec& v) {
  Vec w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] + v[i];
  return w;
}
inline Vec operator-(const Vec& u, const Vec& v) {
  Vec w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] - v[i];
  return w;
}
inline Vec operator*(double s, const Vec& v) {
  Vec w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = s * v[i];
  return w;
}

inline double dot(const Vec& u, const Vec& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline double norm_inf(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

inline double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline Vec matvec(const Mat& m, const Vec& v) {
  Vec w(static_cast<std::size_t>(m.n), 0.0);
  for (int i = 0; i < m.n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.n; ++j) s += m(i, j) * v[static_cast<std::size_t>(j)];
    w[static_cast<std::size_t>(i)] = s;
  }
  return w;
}

/// xᵀ M y
inline double quad_form(const Mat& m, const Vec& x, const Vec& y) {
  double s = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j)
      s += x[static_cast<std::size_t>(i)] * m(i, j) * y[static_cast<std::size_t>(j)];
  return s;
}

inline double max_asymmetry(const Mat& m) {
  double d = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) d = std::max(d, std::fabs(m(i, j) - m(j, i)));
  return d;
}

/// Solve m x = b by LU with partial pivoting.
inline Vec solve(Mat m, Vec b) {
  const int n = m.n;
  std::vector<int> piv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) piv[static_cast<std::size_t>(i)] = i;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(m(i, k)) > std::fabs(m(p, k))) p = i;
    if (std::fabs(m(p, k)) < 1e-300)
      throw SingularDiffusion("matrix is numerically singular");
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(m(p, j), m(k, j));
      std::swap(b[static_cast<std::size_t>(p)], b[static_cast<std::size_t>(k)]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      m(i, k) = f;
      for (int j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
      b[static_cast<std::size_t>(i)] -= f * b[static_cast<std::size_t>(k)];
    }
  }
  Vec x(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= m(i, j) * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = s / m(i, i);
  }
  return x;
}

inline Mat inverse(const Mat& m) {
  Mat inv(m.n);
  for (int j = 0; j < m.n; ++j) {
    Vec e(static_cast<std::size_t>(m.n), 0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    Vec col = solve(m, e);
    for (int i = 0; i < m.n; ++i) inv(i, j) = col[static_cast<std::size_t>(i)];
  }
  return inv;
}

inline double determinant(Mat m) {
  const int n = m.n;
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(m(i, k)) > std::fabs(m(p, k))) p = i;
    if (std::fabs(m(p, k)) == 0.0) return 0.0;
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(m(p, j), m(k, j));
      det = -det;
    }
    det *= m(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      for (int j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return det;
}

/// Lower Cholesky factor of an SPD matrix.
inline Mat cholesky(const Mat& m) {
  Mat L(m.n);
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (s <= 0.0) throw DegenerateDiffusion("matrix is not positive definite");
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  return L;
}

/// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
inline Vec sym_eigenvalues(Mat m) {
  const int n = m.n;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(m(p, q)) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  Vec eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = m(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

/// Pairwise (cascade) summation; reduction-order independent by construction.
inline double pairwise_sum(const double* data, std::size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += data[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v.data(), v.size());
}

}  // namespace ldt
