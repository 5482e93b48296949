#include "tos/prox.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace tos {

namespace {

void require_positive(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument(std::string(what) + ": threshold must be positive and finite");
  }
}

Matrix reassemble(const Svd& svd, const Vector& s) {
  return svd.u * s.asDiagonal() * svd.v.transpose();
}

}  // namespace

Vector prox_l1(const Vector& x, double t) {
  require_positive(t, "prox_l1");
  require_finite(x, "prox_l1");
  return x.unaryExpr([t](double v) { return std::copysign(std::max(std::abs(v) - t, 0.0), v); });
}

Vector prox_group_l2(const Vector& x, const std::vector<IndexBlock>& groups, std::span<const double> weights,
                     double t) {
  require_positive(t, "prox_group_l2");
  require_finite(x, "prox_group_l2");
  if (weights.size() != groups.size()) throw std::invalid_argument("prox_group_l2: one weight per group required");
  std::vector<bool> seen(static_cast<std::size_t>(x.size()), false);
  Vector out = x;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!(weights[g] > 0.0)) throw std::invalid_argument("prox_group_l2: group weights must be positive");
    double sq = 0.0;
    for (Eigen::Index i : groups[g]) {
      if (i < 0 || i >= x.size()) throw std::invalid_argument("prox_group_l2: index out of range");
      if (seen[i]) throw std::invalid_argument("prox_group_l2: overlapping groups (split them into two terms)");
      seen[i] = true;
      sq += x(i) * x(i);
    }
    const double nrm = std::sqrt(sq);
    const double thresh = t * weights[g];
    const double scale = nrm <= thresh ? 0.0 : 1.0 - thresh / nrm;
    for (Eigen::Index i : groups[g]) out(i) = scale * x(i);
  }
  return out;
}

Matrix prox_nuclear(const Matrix& x, double t) {
  require_positive(t, "prox_nuclear");
  const Svd svd = dense_svd(x);
  const Vector s = svd.s.unaryExpr([t](double v) { return std::max(v - t, 0.0); });
  return reassemble(svd, s);
}

Vector proj_box(const Vector& x, const Vector& lo, const Vector& hi) {
  if (lo.size() != x.size() || hi.size() != x.size()) throw std::invalid_argument("proj_box: size mismatch");
  if ((lo.array() > hi.array()).any()) throw std::invalid_argument("proj_box: lo > hi");
  require_finite(x, "proj_box");
  return x.cwiseMax(lo).cwiseMin(hi);
}

Vector proj_box(const Vector& x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("proj_box: lo > hi");
  require_finite(x, "proj_box");
  return x.cwiseMax(lo).cwiseMin(hi);
}

Vector proj_simplex(const Vector& x) {
  if (x.size() < 1) throw std::invalid_argument("proj_simplex: empty vector");
  require_finite(x, "proj_simplex");
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumsum += sorted[k];
    const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
  }
  Vector out = (x.array() - tau).cwiseMax(0.0);
  // Renormalize the support so the sum is 1 to rounding.
  const double total = out.sum();
  if (total > 0.0) out /= total;
  return out;
}

Vector proj_capped_nonneg_l1(const Vector& s, double radius) {
  require_positive(radius, "proj_capped_nonneg_l1");
  Vector clipped = s.cwiseMax(0.0);
  if (clipped.sum() <= radius) return clipped;
  return radius * proj_simplex(s / radius);
}

Vector proj_halfspace(const Vector& x, const Vector& a, double b) {
  if (a.size() != x.size()) throw std::invalid_argument("proj_halfspace: size mismatch");
  const double an = a.squaredNorm();
  if (an == 0.0) throw std::invalid_argument("proj_halfspace: normal vector is zero");
  require_finite(x, "proj_halfspace");
  const double ax = a.dot(x);
  if (ax >= b) return x;
  return x + ((b - ax) / an) * a;
}

Matrix proj_nuclear_ball(const Matrix& x, double radius) {
  require_positive(radius, "proj_nuclear_ball");
  const Svd svd = dense_svd(x);
  if (svd.s.sum() <= radius) return x;
  return reassemble(svd, proj_capped_nonneg_l1(svd.s, radius));
}

Vector proj_pairwise_order(const Vector& x, std::span<const IndexPair> pairs) {
  require_finite(x, "proj_pairwise_order");
  std::vector<bool> used(static_cast<std::size_t>(x.size()), false);
  Vector out = x;
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= x.size() || j >= x.size() || i == j) {
      throw std::invalid_argument("proj_pairwise_order: invalid pair index");
    }
    if (used[i] || used[j]) throw std::invalid_argument("proj_pairwise_order: index reused across pairs");
    used[i] = used[j] = true;
    if (x(i) > x(j)) out(i) = out(j) = 0.5 * (x(i) + x(j));
  }
  return out;
}

Vector proj_monotone(const Vector& x) {
  require_finite(x, "proj_monotone");
  const Eigen::Index n = x.size();
  std::vector<double> value;
  std::vector<Eigen::Index> count;
  value.reserve(n);
  count.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    value.push_back(x(i));
    count.push_back(1);
    while (value.size() > 1 && value[value.size() - 2] > value.back()) {
      const double v = value.back();
      const Eigen::Index c = count.back();
      value.pop_back();
      count.pop_back();
      const double merged = (value.back() * static_cast<double>(count.back()) + v * static_cast<double>(c)) /
                            static_cast<double>(count.back() + c);
      value.back() = merged;
      count.back() += c;
    }
  }
  Vector out(n);
  Eigen::Index pos = 0;
  for (std::size_t b = 0; b < value.size(); ++b)
    for (Eigen::Index k = 0; k < count[b]; ++k) out(pos++) = value[b];
  return out;
}

// Dynamic programming over the piecewise-linear derivative of the forward
// message (Johnson 2013). Knots live in x[l..r]; a/b hold the slope and
// intercept increments at each knot. tm/tp are the back-pointer thresholds.
Vector prox_tv_1d(const Vector& y, double t) {
  require_positive(t, "prox_tv_1d");
  if (y.size() < 1) throw std::invalid_argument("prox_tv_1d: empty vector");
  require_finite(y, "prox_tv_1d");
  const Eigen::Index n = y.size();
  if (n == 1) return y;

  std::vector<double> x(2 * n), a(2 * n), b(2 * n), tm(n - 1), tp(n - 1);
  tm[0] = -t + y(0);
  tp[0] = t + y(0);
  Eigen::Index l = n - 1;
  Eigen::Index r = n;
  x[l] = tm[0];
  x[r] = tp[0];
  a[l] = 1.0;
  b[l] = -y(0) + t;
  a[r] = -1.0;
  b[r] = y(0) + t;
  double afirst = 1.0;
  double bfirst = -t - y(1);
  double alast = -1.0;
  double blast = -t + y(1);

  for (Eigen::Index k = 1; k < n - 1; ++k) {
    double alo = afirst;
    double blo = bfirst;
    Eigen::Index lo = l;
    for (; lo <= r; ++lo) {
      if (alo * x[lo] + blo > -t) break;
      alo += a[lo];
      blo += b[lo];
    }
    tm[k] = (-t - blo) / alo;
    l = lo - 1;
    x[l] = tm[k];

    double ahi = alast;
    double bhi = blast;
    Eigen::Index hi = r;
    for (; hi >= l; --hi) {
      if (-ahi * x[hi] - bhi < t) break;
      ahi += a[hi];
      bhi += b[hi];
    }
    tp[k] = (t + bhi) / (-ahi);
    r = hi + 1;
    x[r] = tp[k];

    a[l] = alo;
    b[l] = blo + t;
    a[r] = ahi;
    b[r] = bhi + t;
    afirst = 1.0;
    bfirst = -t - y(k + 1);
    alast = -1.0;
    blast = -t + y(k + 1);
  }

  double alo = afirst;
  double blo = bfirst;
  for (Eigen::Index lo = l; lo <= r; ++lo) {
    if (alo * x[lo] + blo > 0.0) break;
    alo += a[lo];
    blo += b[lo];
  }
  Vector beta(n);
  beta(n - 1) = -blo / alo;
  for (Eigen::Index k = n - 2; k >= 0; --k) {
    if (beta(k + 1) > tp[k]) {
      beta(k) = tp[k];
    } else if (beta(k + 1) < tm[k]) {
      beta(k) = tm[k];
    } else {
      beta(k) = beta(k + 1);
    }
  }
  return beta;
}

}  // namespace tos
