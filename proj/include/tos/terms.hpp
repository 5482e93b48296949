#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tos/linalg.hpp"
#include "tos/prox.hpp"

namespace tos {

enum class TermKind {
  zero,
  l1,
  group_l2,
  nuclear,
  box,
  simplex,
  halfspace,
  nuclear_ball,
  pairwise_order,
  tv,
  consensus,
  block_concat,
};

/// A proper closed convex function seen only through its value and prox map.
///
/// Matrix-valued terms act on row-major flattened vectors. Indicator terms
/// report +inf outside their set (with a small feasibility tolerance so that
/// rounded projections still evaluate to zero).
class ProxTerm {
 public:
  virtual ~ProxTerm() = default;

  virtual TermKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual double value(const Vector& x) const = 0;
  /// prox_{gamma * term}(x); gamma must be positive.
  virtual Vector prox(const Vector& x, double gamma) const = 0;
  virtual bool is_indicator() const { return false; }

  /// Value for penalties, zero for indicators (feasibility is tracked separately).
  virtual double penalty(const Vector& x) const { return is_indicator() ? 0.0 : value(x); }
  /// Distance to the set for indicators, zero otherwise.
  virtual double distance(const Vector& x) const;
};

using TermPtr = std::shared_ptr<const ProxTerm>;

inline constexpr double kFeasibilityTol = 1e-8;

class ZeroTerm final : public ProxTerm {
 public:
  TermKind kind() const override { return TermKind::zero; }
  std::string name() const override { return "zero"; }
  double value(const Vector&) const override { return 0.0; }
  Vector prox(const Vector& x, double gamma) const override;
};

/// lambda * ||x||_1
class L1Term final : public ProxTerm {
 public:
  explicit L1Term(double lambda);
  TermKind kind() const override { return TermKind::l1; }
  std::string name() const override { return "l1"; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;

 private:
  double lambda_;
};

/// lambda * sum_g w_g ||x_g||_2 over disjoint groups.
class GroupL2Term final : public ProxTerm {
 public:
  GroupL2Term(std::vector<IndexBlock> groups, std::vector<double> weights, double lambda);
  TermKind kind() const override { return TermKind::group_l2; }
  std::string name() const override { return "group_l2"; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;
  const std::vector<IndexBlock>& groups() const { return groups_; }

 private:
  std::vector<IndexBlock> groups_;
  std::vector<double> weights_;
  double lambda_;
};

/// lambda * ||X||_* for an rows x cols matrix variable.
class NuclearTerm final : public ProxTerm {
 public:
  NuclearTerm(Eigen::Index rows, Eigen::Index cols, double lambda);
  TermKind kind() const override { return TermKind::nuclear; }
  std::string name() const override { return "nuclear"; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;

 private:
  Eigen::Index rows_, cols_;
  double lambda_;
};

class BoxIndicator final : public ProxTerm {
 public:
  BoxIndicator(Vector lo, Vector hi);
  BoxIndicator(Eigen::Index n, double lo, double hi);
  TermKind kind() const override { return TermKind::box; }
  std::string name() const override { return "box"; }
  bool is_indicator() const override { return true; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;

 private:
  Vector lo_, hi_;
};

class SimplexIndicator final : public ProxTerm {
 public:
  TermKind kind() const override { return TermKind::simplex; }
  std::string name() const override { return "simplex"; }
  bool is_indicator() const override { return true; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;
};

/// Indicator of {x : <a, x> >= b}.
class HalfspaceIndicator final : public ProxTerm {
 public:
  HalfspaceIndicator(Vector a, double b);
  TermKind kind() const override { return TermKind::halfspace; }
  std::string name() const override { return "halfspace"; }
  bool is_indicator() const override { return true; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;

 private:
  Vector a_;
  double b_;
};

class NuclearBallIndicator final : public ProxTerm {
 public:
  NuclearBallIndicator(Eigen::Index rows, Eigen::Index cols, double radius);
  TermKind kind() const override { return TermKind::nuclear_ball; }
  std::string name() const override { return "nuclear_ball"; }
  bool is_indicator() const override { return true; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;

 private:
  Eigen::Index rows_, cols_;
  double radius_;
};

/// Indicator of {x_i <= x_j for all listed pairs}; pairs are disjoint.
class PairwiseOrderIndicator final : public ProxTerm {
 public:
  explicit PairwiseOrderIndicator(std::vector<IndexPair> pairs);
  /// Chain pairs (first, first+1), (first+2, first+3), ... over n coordinates.
  static std::vector<IndexPair> chain_pairs(Eigen::Index n, Eigen::Index first);
  TermKind kind() const override { return TermKind::pairwise_order; }
  std::string name() const override { return "pairwise_order"; }
  bool is_indicator() const override { return true; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;
  const std::vector<IndexPair>& pairs() const { return pairs_; }

 private:
  std::vector<IndexPair> pairs_;
};

enum class TvAxis { rows, cols };

/// Anisotropic total variation along one axis of an rows x cols image:
/// lambda * sum |X_{i,j+1} - X_{i,j}| (rows) or lambda * sum |X_{i+1,j} - X_{i,j}| (cols).
/// A 1-D signal is the rows axis of a 1 x n image.
class TvTerm final : public ProxTerm {
 public:
  TvTerm(Eigen::Index rows, Eigen::Index cols, double lambda, TvAxis axis);
  TermKind kind() const override { return TermKind::tv; }
  std::string name() const override { return axis_ == TvAxis::rows ? "tv_rows" : "tv_cols"; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;

 private:
  Eigen::Index rows_, cols_;
  double lambda_;
  TvAxis axis_;
};

/// max over probes y of <x - u, y - u> - gamma (term(y) - term(u)) with
/// u = prox_{gamma term}(x). Probes where the term is infinite are skipped.
/// A correct prox gives a value <= 0 up to rounding.
double prox_optimality_check(const ProxTerm& term, const Vector& x, double gamma, const std::vector<Vector>& probes);

/// ||Px - Py||^2 - <x - y, Px - Py> for P = prox_{gamma term}; nonpositive for a firmly nonexpansive map.
double firm_nonexpansive_gap(const ProxTerm& term, const Vector& x, const Vector& y, double gamma);

}  // namespace tos
