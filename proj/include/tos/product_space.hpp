#pragma once

#include <vector>

#include "tos/oracle.hpp"
#include "tos/splitting.hpp"
#include "tos/terms.hpp"

namespace tos {

/// sum_i phi_i(x) over R^d, split into prox-handled terms phi_1..phi_p and
/// oracle-handled terms phi_{p+1}..phi_q.
struct MultiTermProblem {
  Eigen::Index dim = 0;
  std::vector<TermPtr> prox_terms;
  std::vector<OraclePtr> oracle_terms;

  /// Sum of all terms at a base point (indicator terms count as zero).
  double objective(const Vector& x) const;
};

/// Points of R^{d (p+1)} are stored as [x_0 | x_1 | ... | x_p].
Vector lift(const Vector& x, std::size_t blocks);
Eigen::Map<const Vector> block(const Vector& pt, Eigen::Index dim, std::size_t i);
double consensus_gap(const Vector& pt, Eigen::Index dim);

/// Indicator of x_0 = x_1 = ... = x_p; prox replaces every block by the mean.
class ConsensusTerm final : public ProxTerm {
 public:
  ConsensusTerm(Eigen::Index dim, std::size_t blocks);
  TermKind kind() const override { return TermKind::consensus; }
  std::string name() const override { return "consensus"; }
  bool is_indicator() const override { return true; }
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;

 private:
  Eigen::Index dim_;
  std::size_t blocks_;
};

/// sum_{i >= 1} phi_i(x_i); x_0 passes through unchanged.
class ConcatTerm final : public ProxTerm {
 public:
  ConcatTerm(Eigen::Index dim, std::vector<TermPtr> terms);
  TermKind kind() const override { return TermKind::block_concat; }
  std::string name() const override { return "block_concat"; }
  bool is_indicator() const override;
  double value(const Vector& x) const override;
  double penalty(const Vector& x) const override;
  double distance(const Vector& x) const override;
  Vector prox(const Vector& x, double gamma) const override;

 private:
  Eigen::Index dim_;
  std::vector<TermPtr> terms_;
};

/// sum_j phi_j(x_0); directions land in the x_0 slot, zeros elsewhere.
class LiftedOracle final : public Oracle {
 public:
  LiftedOracle(Eigen::Index dim, std::size_t blocks, std::vector<OraclePtr> terms);
  Eigen::Index dim() const override { return dim_ * static_cast<Eigen::Index>(blocks_); }
  double value(const Vector& x) const override;
  Vector subgradient(const Vector& x) const override;
  Vector direction(const Vector& x, RandomStream& rng) const override;
  bool is_stochastic() const override;
  OracleConstants constants() const override;
  std::string name() const override { return "lifted"; }

 private:
  Eigen::Index dim_;
  std::size_t blocks_;
  std::vector<OraclePtr> terms_;
};

/// g = consensus, h = concatenated prox terms, f = sum of oracle terms at x_0.
/// y0 is the base starting point copied into every block.
Problem build_lifted_problem(const MultiTermProblem& mtp, const Vector& y0);

/// x_0 block of a lifted point.
Vector extract_answer(const Vector& pt, Eigen::Index dim);

}  // namespace tos
