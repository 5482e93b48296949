#include "tos/terms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tos {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("prox: step must be positive and finite");
}

double scale_tol(const Vector& x) {
  return kFeasibilityTol * (1.0 + (x.size() > 0 ? x.cwiseAbs().maxCoeff() : 0.0));
}

}  // namespace

double ProxTerm::distance(const Vector& x) const {
  if (!is_indicator()) return 0.0;
  return (x - prox(x, 1.0)).norm();
}

Vector ZeroTerm::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  return x;
}

L1Term::L1Term(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("L1Term: lambda must be >= 0");
}

double L1Term::value(const Vector& x) const { return lambda_ * x.lpNorm<1>(); }

Vector L1Term::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  if (lambda_ == 0.0) return x;
  return prox_l1(x, gamma * lambda_);
}

GroupL2Term::GroupL2Term(std::vector<IndexBlock> groups, std::vector<double> weights, double lambda)
    : groups_(std::move(groups)), weights_(std::move(weights)), lambda_(lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("GroupL2Term: lambda must be >= 0");
  if (groups_.size() != weights_.size()) throw std::invalid_argument("GroupL2Term: one weight per group required");
  std::vector<Eigen::Index> all;
  for (const auto& g : groups_) all.insert(all.end(), g.begin(), g.end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw std::invalid_argument("GroupL2Term: overlapping groups (split them into two terms)");
  }
}

double GroupL2Term::value(const Vector& x) const {
  double total = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    double sq = 0.0;
    for (Eigen::Index i : groups_[g]) sq += x(i) * x(i);
    total += weights_[g] * std::sqrt(sq);
  }
  return lambda_ * total;
}

Vector GroupL2Term::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  if (lambda_ == 0.0) return x;
  return prox_group_l2(x, groups_, weights_, gamma * lambda_);
}

NuclearTerm::NuclearTerm(Eigen::Index rows, Eigen::Index cols, double lambda)
    : rows_(rows), cols_(cols), lambda_(lambda) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("NuclearTerm: empty shape");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("NuclearTerm: lambda must be >= 0");
}

double NuclearTerm::value(const Vector& x) const {
  if (lambda_ == 0.0) return 0.0;
  return lambda_ * nuclear_norm(unflatten(x, rows_, cols_));
}

Vector NuclearTerm::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  if (lambda_ == 0.0) return x;
  return flatten(prox_nuclear(unflatten(x, rows_, cols_), gamma * lambda_));
}

BoxIndicator::BoxIndicator(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw std::invalid_argument("BoxIndicator: size mismatch");
  if ((lo_.array() > hi_.array()).any()) throw std::invalid_argument("BoxIndicator: lo > hi");
}

BoxIndicator::BoxIndicator(Eigen::Index n, double lo, double hi)
    : BoxIndicator(Vector::Constant(n, lo), Vector::Constant(n, hi)) {}

double BoxIndicator::value(const Vector& x) const {
  const double tol = scale_tol(x);
  const bool inside = ((x - lo_).array() >= -tol).all() && ((hi_ - x).array() >= -tol).all();
  return inside ? 0.0 : kInf;
}

Vector BoxIndicator::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  return proj_box(x, lo_, hi_);
}

double SimplexIndicator::value(const Vector& x) const {
  const double tol = scale_tol(x);
  const bool inside = (x.array() >= -tol).all() && std::abs(x.sum() - 1.0) <= tol;
  return inside ? 0.0 : kInf;
}

Vector SimplexIndicator::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  return proj_simplex(x);
}

HalfspaceIndicator::HalfspaceIndicator(Vector a, double b) : a_(std::move(a)), b_(b) {
  if (a_.squaredNorm() == 0.0) throw std::invalid_argument("HalfspaceIndicator: normal vector is zero");
}

double HalfspaceIndicator::value(const Vector& x) const {
  const double tol = kFeasibilityTol * (1.0 + std::abs(b_) + a_.norm() * x.norm());
  return a_.dot(x) >= b_ - tol ? 0.0 : kInf;
}

Vector HalfspaceIndicator::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  return proj_halfspace(x, a_, b_);
}

NuclearBallIndicator::NuclearBallIndicator(Eigen::Index rows, Eigen::Index cols, double radius)
    : rows_(rows), cols_(cols), radius_(radius) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("NuclearBallIndicator: empty shape");
  if (!(radius > 0.0)) throw std::invalid_argument("NuclearBallIndicator: radius must be positive");
}

double NuclearBallIndicator::value(const Vector& x) const {
  const double nn = nuclear_norm(unflatten(x, rows_, cols_));
  return nn <= radius_ * (1.0 + kFeasibilityTol) + kFeasibilityTol ? 0.0 : kInf;
}

Vector NuclearBallIndicator::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  return flatten(proj_nuclear_ball(unflatten(x, rows_, cols_), radius_));
}

PairwiseOrderIndicator::PairwiseOrderIndicator(std::vector<IndexPair> pairs) : pairs_(std::move(pairs)) {
  std::vector<Eigen::Index> all;
  for (const auto& [i, j] : pairs_) {
    if (i < 0 || j < 0 || i == j) throw std::invalid_argument("PairwiseOrderIndicator: invalid pair");
    all.push_back(i);
    all.push_back(j);
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw std::invalid_argument("PairwiseOrderIndicator: index reused across pairs");
  }
}

std::vector<IndexPair> PairwiseOrderIndicator::chain_pairs(Eigen::Index n, Eigen::Index first) {
  std::vector<IndexPair> pairs;
  for (Eigen::Index i = first; i + 1 < n; i += 2) pairs.emplace_back(i, i + 1);
  return pairs;
}

double PairwiseOrderIndicator::value(const Vector& x) const {
  const double tol = scale_tol(x);
  for (const auto& [i, j] : pairs_) {
    if (x(i) > x(j) + tol) return kInf;
  }
  return 0.0;
}

Vector PairwiseOrderIndicator::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  return proj_pairwise_order(x, pairs_);
}

TvTerm::TvTerm(Eigen::Index rows, Eigen::Index cols, double lambda, TvAxis axis)
    : rows_(rows), cols_(cols), lambda_(lambda), axis_(axis) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("TvTerm: empty shape");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("TvTerm: lambda must be >= 0");
}

double TvTerm::value(const Vector& x) const {
  const Matrix img = unflatten(x, rows_, cols_);
  double total = 0.0;
  if (axis_ == TvAxis::rows) {
    if (cols_ > 1) total = (img.rightCols(cols_ - 1) - img.leftCols(cols_ - 1)).cwiseAbs().sum();
  } else {
    if (rows_ > 1) total = (img.bottomRows(rows_ - 1) - img.topRows(rows_ - 1)).cwiseAbs().sum();
  }
  return lambda_ * total;
}

Vector TvTerm::prox(const Vector& x, double gamma) const {
  require_gamma(gamma);
  if (lambda_ == 0.0) return x;
  const double t = gamma * lambda_;
  Matrix img = unflatten(x, rows_, cols_);
  if (axis_ == TvAxis::rows) {
    for (Eigen::Index i = 0; i < rows_; ++i) img.row(i) = prox_tv_1d(img.row(i).transpose(), t).transpose();
  } else {
    for (Eigen::Index j = 0; j < cols_; ++j) img.col(j) = prox_tv_1d(img.col(j), t);
  }
  return flatten(img);
}

double prox_optimality_check(const ProxTerm& term, const Vector& x, double gamma, const std::vector<Vector>& probes) {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox_optimality_check: step size must be positive");
  const Vector u = term.prox(x, gamma);
  const double tu = term.value(u);
  double worst = -std::numeric_limits<double>::infinity();
  for (const Vector& y : probes) {
    const double ty = term.value(y);
    if (!std::isfinite(ty)) continue;
    worst = std::max(worst, (x - u).dot(y - u) - gamma * (ty - tu));
  }
  return worst;
}

double firm_nonexpansive_gap(const ProxTerm& term, const Vector& x, const Vector& y, double gamma) {
  const Vector d = term.prox(x, gamma) - term.prox(y, gamma);
  return d.squaredNorm() - (x - y).dot(d);
}

}  // namespace tos
