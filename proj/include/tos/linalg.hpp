#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace tos {

using Vector = Eigen::VectorXd;
// Row-major so that a matrix and its flattened vector share one layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when an iterative numerical routine cannot produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

/// Throws std::invalid_argument naming `what` if `v` holds NaN or Inf.
void require_finite(const Vector& v, std::string_view what);
void require_finite(const Matrix& m, std::string_view what);

/// Row-major flatten / unflatten between matrix variables and engine vectors.
Vector flatten(const Matrix& m);
Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols);

struct Svd {
  Matrix u;  // m x k, orthonormal columns
  Vector s;  // k, nonincreasing, nonnegative
  Matrix v;  // n x k, orthonormal columns
};

/// Thin SVD by one-sided Jacobi rotations, k = min(m, n).
///
/// Rotations are applied until every column pair is orthogonal to 1e-12
/// relative; more than `max_sweeps` sweeps raises NumericalError. Columns of
/// U belonging to zero singular values are completed to an orthonormal set.
Svd dense_svd(const Matrix& m, int max_sweeps = 100);

double nuclear_norm(const Matrix& m);
double spectral_norm(const Matrix& m);

}  // namespace tos
