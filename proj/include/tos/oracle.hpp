#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tos/linalg.hpp"
#include "tos/random.hpp"

namespace tos {

/// Linear map x -> A x with adjoint. Row access is needed for minibatch sampling.
class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector adjoint(const Vector& r) const = 0;

  virtual bool has_row_access() const { return false; }
  /// <a_i, x>
  virtual double row_dot(Eigen::Index i, const Vector& x) const;
  /// out += coeff * a_i
  virtual void add_row(Eigen::Index i, double coeff, Vector& out) const;
  virtual double row_norm(Eigen::Index i) const;
};

using MapPtr = std::shared_ptr<const LinearMap>;

class DenseMap final : public LinearMap {
 public:
  explicit DenseMap(Matrix a);
  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  Vector apply(const Vector& x) const override { return a_ * x; }
  Vector adjoint(const Vector& r) const override { return a_.transpose() * r; }
  bool has_row_access() const override { return true; }
  double row_dot(Eigen::Index i, const Vector& x) const override { return a_.row(i).dot(x); }
  void add_row(Eigen::Index i, double coeff, Vector& out) const override { out += coeff * a_.row(i).transpose(); }
  double row_norm(Eigen::Index i) const override { return a_.row(i).norm(); }
  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
};

/// Samples the listed coordinates of an n-vector (the rows of a selection matrix).
class SelectionMap final : public LinearMap {
 public:
  SelectionMap(Eigen::Index n, std::vector<Eigen::Index> indices);
  Eigen::Index rows() const override { return static_cast<Eigen::Index>(indices_.size()); }
  Eigen::Index cols() const override { return n_; }
  Vector apply(const Vector& x) const override;
  Vector adjoint(const Vector& r) const override;
  bool has_row_access() const override { return true; }
  double row_dot(Eigen::Index i, const Vector& x) const override { return x(indices_[i]); }
  void add_row(Eigen::Index i, double coeff, Vector& out) const override { out(indices_[i]) += coeff; }
  double row_norm(Eigen::Index) const override { return 1.0; }
  const std::vector<Eigen::Index>& indices() const { return indices_; }

 private:
  Eigen::Index n_;
  std::vector<Eigen::Index> indices_;
};

/// Same-size 2-D convolution of a row-major rows x cols image with an odd
/// kernel, zero padding outside the image. The adjoint correlates with the
/// flipped kernel.
class Convolution2d final : public LinearMap {
 public:
  Convolution2d(Eigen::Index rows, Eigen::Index cols, Matrix kernel);
  Eigen::Index rows() const override { return rows_ * cols_; }
  Eigen::Index cols() const override { return rows_ * cols_; }
  Vector apply(const Vector& x) const override;
  Vector adjoint(const Vector& r) const override;

 private:
  Vector correlate(const Vector& x, bool flip) const;
  Eigen::Index rows_, cols_;
  Matrix kernel_;
};

enum class LossKind { least_squares, lp_power, l1_residual, l2_norm_residual, logistic, hinge, huber };

std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& s);

/// Constants an oracle can declare when they are derivable from its data.
struct OracleConstants {
  std::optional<double> subgradient_bound;  // G_f
  std::optional<double> smoothness;         // L_f
  std::optional<double> variance;           // sigma^2
};

struct OracleEvaluation {
  double value;
  Vector direction;
};

/// First-order information about f: value, a deterministic subgradient
/// selection, and the update direction (possibly a stochastic estimate).
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector subgradient(const Vector& x) const = 0;
  /// Update direction at x. Deterministic oracles ignore rng.
  virtual Vector direction(const Vector& x, RandomStream&) const { return subgradient(x); }
  virtual bool is_stochastic() const { return false; }
  virtual OracleConstants constants() const { return {}; }
  virtual std::string name() const = 0;
};

using OraclePtr = std::shared_ptr<const Oracle>;

/// Value plus update direction at x; rng is required for stochastic oracles.
OracleEvaluation oracle_eval(const Oracle& o, const Vector& x, RandomStream* rng = nullptr);

class ZeroOracle final : public Oracle {
 public:
  explicit ZeroOracle(Eigen::Index n) : n_(n) {}
  Eigen::Index dim() const override { return n_; }
  double value(const Vector&) const override { return 0.0; }
  Vector subgradient(const Vector&) const override { return Vector::Zero(n_); }
  OracleConstants constants() const override { return {0.0, 0.0, 0.0}; }
  std::string name() const override { return "zero"; }

 private:
  Eigen::Index n_;
};

/// f(x) = <c, x>
class LinearOracle final : public Oracle {
 public:
  explicit LinearOracle(Vector c) : c_(std::move(c)) {}
  Eigen::Index dim() const override { return c_.size(); }
  double value(const Vector& x) const override { return c_.dot(x); }
  Vector subgradient(const Vector&) const override { return c_; }
  OracleConstants constants() const override { return {c_.norm(), 0.0, 0.0}; }
  std::string name() const override { return "linear"; }

 private:
  Vector c_;
};

struct LossOptions {
  double p = 2.0;            // lp_power exponent, in [1, 2]
  double huber_delta = 1.0;  // huber threshold
  /// 0 selects the deterministic oracle; otherwise minibatch size drawn
  /// uniformly with replacement. A batch covering the dataset is deterministic.
  Eigen::Index batch = 0;
};

/// Data-fit losses over z = A x:
///   least_squares     1/2 ||Ax - b||^2
///   lp_power          (1/p) ||Ax - b||_p^p
///   l1_residual       ||Ax - b||_1
///   l2_norm_residual  ||Ax - b||_2
///   logistic          (1/N) sum log(1 + exp(-b_i <a_i, x>))
///   hinge             (1/N) sum max(0, 1 - b_i <a_i, x>)
///   huber             (1/N) sum huber_delta(b_i - <a_i, x>)
/// Kinks use sign(0) = 0, the zero vector at a zero residual for the l2 norm,
/// and 0 at the hinge point.
class FirstOrderOracle final : public Oracle {
 public:
  FirstOrderOracle(LossKind kind, MapPtr a, Vector b, LossOptions options = {});

  Eigen::Index dim() const override { return a_->cols(); }
  double value(const Vector& x) const override;
  Vector subgradient(const Vector& x) const override;
  Vector direction(const Vector& x, RandomStream& rng) const override;
  bool is_stochastic() const override;
  OracleConstants constants() const override { return constants_; }
  std::string name() const override { return to_string(kind_); }

  LossKind kind() const { return kind_; }
  const LinearMap& map() const { return *a_; }
  const Vector& data() const { return b_; }
  const LossOptions& options() const { return options_; }
  void declare(OracleConstants c) { constants_ = c; }
  /// Copy with a different sampling batch (0 = deterministic).
  FirstOrderOracle with_batch(Eigen::Index batch) const;

 private:
  // d loss / d z_i at z_i, scaled so that sum_i psi_i a_i is the full subgradient.
  double psi(Eigen::Index i, double zi, double l2_norm) const;
  double row_loss(Eigen::Index i, double zi) const;
  bool mean_scaled() const;

  LossKind kind_;
  MapPtr a_;
  Vector b_;
  LossOptions options_;
  OracleConstants constants_;
};

}  // namespace tos
