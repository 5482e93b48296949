#pragma once

// Slow reference implementations used to check the library's closed forms.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "tos/linalg.hpp"

namespace oracle {

using tos::Matrix;
using tos::Vector;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Golden-section search for a convex function on [lo, hi].
inline double argmin_1d(const std::function<double(double)>& fn, double lo, double hi) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int k = 0; k < 200 && b - a > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++k) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - r * (b - a), fc = fn(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + r * (b - a), fd = fn(d);
    }
  }
  return 0.5 * (a + b);
}

inline Vector prox_l1(const Vector& x, double t) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    out(i) = argmin_1d([&](double s) { return 0.5 * (s - xi) * (s - xi) + t * std::abs(s); }, xi - t - 1.0,
                       xi + t + 1.0);
  }
  return out;
}

// The minimizer is a nonnegative multiple of x_G; search the radius.
inline Vector prox_group_l2(const Vector& x, const std::vector<std::vector<Eigen::Index>>& groups,
                            const std::vector<double>& weights, double t) {
  Vector out = x;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    Vector xg(static_cast<Eigen::Index>(groups[k].size()));
    for (std::size_t j = 0; j < groups[k].size(); ++j) xg(static_cast<Eigen::Index>(j)) = x(groups[k][j]);
    const double nx = xg.norm();
    const double tw = t * weights[k];
    const double s = nx == 0.0 ? 0.0 : argmin_1d([&](double r) { return 0.5 * (r - nx) * (r - nx) + tw * r; }, 0.0, nx);
    for (std::size_t j = 0; j < groups[k].size(); ++j) {
      out(groups[k][j]) = nx == 0.0 ? 0.0 : s * xg(static_cast<Eigen::Index>(j)) / nx;
    }
  }
  return out;
}

inline Vector proj_box(const Vector& x, const Vector& lo, const Vector& hi) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    const double a = std::isfinite(lo(i)) ? lo(i) : std::min(xi, hi(i)) - 1.0;
    const double b = std::isfinite(hi(i)) ? hi(i) : std::max(xi, lo(i)) + 1.0;
    out(i) = argmin_1d([&](double s) { return (s - xi) * (s - xi); }, a, b);
  }
  return out;
}

// Enumerate supports; on a support S the projection onto {sum = 1} is a shift.
inline Vector proj_simplex(const Vector& x) {
  const auto n = x.size();
  Vector best;
  double best_d = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0;
    int k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask >> i & 1u) sum += x(i), ++k;
    }
    const double shift = (sum - 1.0) / k;
    Vector u = Vector::Zero(n);
    bool ok = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask >> i & 1u) {
        u(i) = x(i) - shift;
        ok = ok && u(i) >= -1e-15;
      }
    }
    if (ok && (u - x).norm() < best_d) best_d = (u - x).norm(), best = u;
  }
  return best;
}

inline Vector proj_halfspace(const Vector& x, const Vector& a, double b) {
  if (a.dot(x) >= b) return x;
  return x + (b - a.dot(x)) / a.squaredNorm() * a;
}

// Disjoint pairs: each pair is either untouched or merged to its mean.
inline Vector proj_pairs(const Vector& x, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs) {
  Vector out = x;
  for (const auto& [i, j] : pairs) {
    if (x(i) > x(j)) out(i) = out(j) = 0.5 * (x(i) + x(j));
  }
  return out;
}

// Dual of the 1-D TV prox is a box QP in z with u = x - D^T z; enumerate
// lower / upper / free for every coordinate.
inline Vector prox_tv_1d(const Vector& x, double t) {
  const auto n = x.size();
  if (n < 2) return x;
  const auto m = n - 1;
  Matrix d = Matrix::Zero(m, n);
  for (Eigen::Index i = 0; i < m; ++i) d(i, i) = -1.0, d(i, i + 1) = 1.0;
  long total = 1;
  for (Eigen::Index i = 0; i < m; ++i) total *= 3;
  Vector best_z;
  double best = std::numeric_limits<double>::infinity();
  for (long code = 0; code < total; ++code) {
    Vector z = Vector::Zero(m);
    std::vector<Eigen::Index> free;
    long c = code;
    for (Eigen::Index i = 0; i < m; ++i, c /= 3) {
      if (c % 3 == 0) z(i) = -t;
      else if (c % 3 == 1) z(i) = t;
      else free.push_back(i);
    }
    if (!free.empty()) {
      const auto k = static_cast<Eigen::Index>(free.size());
      Matrix df(k, n);
      for (Eigen::Index r = 0; r < k; ++r) df.row(r) = d.row(free[static_cast<std::size_t>(r)]);
      const Vector rhs = df * (x - d.transpose() * z);
      const Vector zf = (df * df.transpose()).ldlt().solve(rhs);
      bool ok = true;
      for (Eigen::Index r = 0; r < k; ++r) {
        ok = ok && std::abs(zf(r)) <= t * (1.0 + 1e-12);
        z(free[static_cast<std::size_t>(r)]) = zf(r);
      }
      if (!ok) continue;
    }
    const double obj = 0.5 * (x - d.transpose() * z).squaredNorm();
    if (obj < best) best = obj, best_z = z;
  }
  return x - d.transpose() * best_z;
}

inline Vector prox_nuclear(const Vector& x, Eigen::Index rows, Eigen::Index cols, double t) {
  const RowMajor xm = Eigen::Map<const RowMajor>(x.data(), rows, cols);
  Eigen::JacobiSVD<Matrix> svd(xm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = (svd.singularValues().array() - t).max(0.0).matrix();
  const RowMajor out = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  return Eigen::Map<const Vector>(out.data(), out.size());
}

// Singular values are shrunk by the tau with sum max(s - tau, 0) = radius, found by bisection.
inline Vector proj_nuclear_ball(const Vector& x, Eigen::Index rows, Eigen::Index cols, double radius) {
  const RowMajor xm = Eigen::Map<const RowMajor>(x.data(), rows, cols);
  Eigen::JacobiSVD<Matrix> svd(xm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  if (s.sum() <= radius) return x;
  double lo = 0.0, hi = s.maxCoeff();
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    ((s.array() - mid).max(0.0).sum() > radius ? lo : hi) = mid;
  }
  const Vector shrunk = (s.array() - 0.5 * (lo + hi)).max(0.0).matrix();
  const RowMajor out = svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
  return Eigen::Map<const Vector>(out.data(), out.size());
}

// Projection onto the null space of the block-difference map x_0 - x_i.
inline Vector proj_consensus(const Vector& x, Eigen::Index dim, std::size_t blocks) {
  const auto p = static_cast<Eigen::Index>(blocks);
  Matrix c = Matrix::Zero(dim * (p - 1), dim * p);
  for (Eigen::Index i = 1; i < p; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      c((i - 1) * dim + j, j) = 1.0;
      c((i - 1) * dim + j, i * dim + j) = -1.0;
    }
  }
  const Vector lambda = (c * c.transpose()).ldlt().solve(c * x);
  return x - c.transpose() * lambda;
}

// Central differences.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& fn, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a(i) += h, b(i) -= h;
    g(i) = (fn(a) - fn(b)) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
