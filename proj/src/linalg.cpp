#include "tos/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace tos {

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Vector& v, std::string_view what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

Vector flatten(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != v.size()) {
    throw std::invalid_argument("unflatten: shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                                " does not match length " + std::to_string(v.size()));
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

namespace {

// Columns of `u` with zero norm are replaced by unit vectors orthogonal to
// every other column (Gram-Schmidt against the canonical basis).
void complete_orthonormal(Eigen::MatrixXd& u, const std::vector<bool>& filled) {
  const Eigen::Index m = u.rows();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    if (filled[j]) continue;
    for (Eigen::Index e = 0; e < m; ++e) {
      Eigen::VectorXd cand = Eigen::VectorXd::Unit(m, e);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index k = 0; k < u.cols(); ++k) {
          if (k == j || (!filled[k] && k > j)) continue;
          cand -= u.col(k).dot(cand) * u.col(k);
        }
      }
      const double nrm = cand.norm();
      if (nrm > 0.5) {
        u.col(j) = cand / nrm;
        break;
      }
    }
  }
}

// Requires m >= n.
Svd jacobi_tall(const Eigen::MatrixXd& a, int max_sweeps) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Eigen::MatrixXd u = a;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  constexpr double tol = 1e-12;

  bool converged = (n < 2);
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double alpha = u.col(i).squaredNorm();
        const double beta = u.col(j).squaredNorm();
        const double gamma = u.col(i).dot(u.col(j));
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (Eigen::Index r = 0; r < m; ++r) {
          const double ui = u(r, i);
          const double uj = u(r, j);
          u(r, i) = c * ui - s * uj;
          u(r, j) = s * ui + c * uj;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double vi = v(r, i);
          const double vj = v(r, j);
          v(r, i) = c * vi - s * vj;
          v(r, j) = s * vi + c * vj;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalError("dense_svd: Jacobi sweeps did not converge within " + std::to_string(max_sweeps) +
                         " sweeps");
  }

  Eigen::VectorXd sv(n);
  for (Eigen::Index j = 0; j < n; ++j) sv(j) = u.col(j).norm();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return sv(l) > sv(r); });

  const double smax = n > 0 ? sv(order[0]) : 0.0;
  const double zero_cut = smax * 1e-15 * static_cast<double>(std::max(m, n));
  Eigen::MatrixXd uo(m, n);
  Eigen::MatrixXd vo(n, n);
  Eigen::VectorXd so(n);
  std::vector<bool> filled(n, true);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[k];
    vo.col(k) = v.col(j);
    if (sv(j) > zero_cut && sv(j) > 0.0) {
      so(k) = sv(j);
      uo.col(k) = u.col(j) / sv(j);
    } else {
      so(k) = 0.0;
      uo.col(k).setZero();
      filled[k] = false;
    }
  }
  complete_orthonormal(uo, filled);
  return Svd{uo, so, vo};
}

}  // namespace

Svd dense_svd(const Matrix& m, int max_sweeps) {
  if (m.rows() < 1 || m.cols() < 1) throw std::invalid_argument("dense_svd: empty matrix");
  require_finite(m, "dense_svd");
  if (m.rows() >= m.cols()) return jacobi_tall(Eigen::MatrixXd(m), max_sweeps);
  Svd t = jacobi_tall(Eigen::MatrixXd(m.transpose()), max_sweeps);
  return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
}

double nuclear_norm(const Matrix& m) { return dense_svd(m).s.sum(); }

double spectral_norm(const Matrix& m) { return dense_svd(m).s(0); }

}  // namespace tos
