#include "tos/product_space.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tos {

double MultiTermProblem::objective(const Vector& x) const {
  double total = 0.0;
  for (const auto& o : oracle_terms) total += o->value(x);
  for (const auto& t : prox_terms) total += t->penalty(x);
  return total;
}

Vector lift(const Vector& x, std::size_t blocks) { return x.replicate(static_cast<Eigen::Index>(blocks), 1); }

Eigen::Map<const Vector> block(const Vector& pt, Eigen::Index dim, std::size_t i) {
  return Eigen::Map<const Vector>(pt.data() + static_cast<Eigen::Index>(i) * dim, dim);
}

double consensus_gap(const Vector& pt, Eigen::Index dim) {
  const auto blocks = static_cast<std::size_t>(pt.size() / dim);
  const auto x0 = block(pt, dim, 0);
  double gap = 0.0;
  for (std::size_t i = 1; i < blocks; ++i) gap = std::max(gap, (block(pt, dim, i) - x0).norm());
  return gap;
}

namespace {

void check_layout(const Vector& x, Eigen::Index dim, std::size_t blocks, const char* who) {
  if (x.size() != dim * static_cast<Eigen::Index>(blocks)) {
    throw std::invalid_argument(std::string(who) + ": point does not match the block layout");
  }
}

}  // namespace

ConsensusTerm::ConsensusTerm(Eigen::Index dim, std::size_t blocks) : dim_(dim), blocks_(blocks) {
  if (dim < 1 || blocks < 2) throw std::invalid_argument("ConsensusTerm: need dim >= 1 and at least two blocks");
}

double ConsensusTerm::value(const Vector& x) const {
  check_layout(x, dim_, blocks_, "ConsensusTerm");
  return consensus_gap(x, dim_) <= kFeasibilityTol ? 0.0 : std::numeric_limits<double>::infinity();
}

Vector ConsensusTerm::prox(const Vector& x, double gamma) const {
  if (!(gamma > 0.0)) throw std::invalid_argument("ConsensusTerm: step size must be positive");
  check_layout(x, dim_, blocks_, "ConsensusTerm");
  Vector mean = Vector::Zero(dim_);
  for (std::size_t i = 0; i < blocks_; ++i) mean += block(x, dim_, i);
  mean /= static_cast<double>(blocks_);
  return lift(mean, blocks_);
}

ConcatTerm::ConcatTerm(Eigen::Index dim, std::vector<TermPtr> terms) : dim_(dim), terms_(std::move(terms)) {
  if (dim < 1 || terms_.empty()) throw std::invalid_argument("ConcatTerm: need dim >= 1 and at least one term");
  for (const auto& t : terms_) {
    if (!t) throw std::invalid_argument("ConcatTerm: missing term");
  }
}

bool ConcatTerm::is_indicator() const {
  for (const auto& t : terms_) {
    if (!t->is_indicator()) return false;
  }
  return true;
}

double ConcatTerm::value(const Vector& x) const {
  check_layout(x, dim_, terms_.size() + 1, "ConcatTerm");
  double total = 0.0;
  for (std::size_t i = 0; i < terms_.size(); ++i) total += terms_[i]->value(block(x, dim_, i + 1));
  return total;
}

double ConcatTerm::penalty(const Vector& x) const {
  check_layout(x, dim_, terms_.size() + 1, "ConcatTerm");
  double total = 0.0;
  for (std::size_t i = 0; i < terms_.size(); ++i) total += terms_[i]->penalty(block(x, dim_, i + 1));
  return total;
}

double ConcatTerm::distance(const Vector& x) const {
  check_layout(x, dim_, terms_.size() + 1, "ConcatTerm");
  double sq = 0.0;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const double d = terms_[i]->distance(block(x, dim_, i + 1));
    sq += d * d;
  }
  return std::sqrt(sq);
}

Vector ConcatTerm::prox(const Vector& x, double gamma) const {
  check_layout(x, dim_, terms_.size() + 1, "ConcatTerm");
  Vector out = x;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    try {
      out.segment(static_cast<Eigen::Index>(i + 1) * dim_, dim_) = terms_[i]->prox(block(x, dim_, i + 1), gamma);
    } catch (const std::exception& e) {
      throw std::runtime_error("block " + std::to_string(i + 1) + " (" + terms_[i]->name() + "): " + e.what());
    }
  }
  return out;
}

LiftedOracle::LiftedOracle(Eigen::Index dim, std::size_t blocks, std::vector<OraclePtr> terms)
    : dim_(dim), blocks_(blocks), terms_(std::move(terms)) {
  if (dim < 1 || blocks < 1) throw std::invalid_argument("LiftedOracle: empty layout");
  for (const auto& t : terms_) {
    if (!t || t->dim() != dim) throw std::invalid_argument("LiftedOracle: term dimension mismatch");
  }
}

double LiftedOracle::value(const Vector& x) const {
  check_layout(x, dim_, blocks_, "LiftedOracle");
  const Vector x0 = block(x, dim_, 0);
  double total = 0.0;
  for (const auto& t : terms_) total += t->value(x0);
  return total;
}

Vector LiftedOracle::subgradient(const Vector& x) const {
  check_layout(x, dim_, blocks_, "LiftedOracle");
  const Vector x0 = block(x, dim_, 0);
  Vector out = Vector::Zero(x.size());
  for (const auto& t : terms_) out.head(dim_) += t->subgradient(x0);
  return out;
}

Vector LiftedOracle::direction(const Vector& x, RandomStream& rng) const {
  check_layout(x, dim_, blocks_, "LiftedOracle");
  const Vector x0 = block(x, dim_, 0);
  Vector out = Vector::Zero(x.size());
  for (const auto& t : terms_) out.head(dim_) += t->direction(x0, rng);
  return out;
}

bool LiftedOracle::is_stochastic() const {
  for (const auto& t : terms_) {
    if (t->is_stochastic()) return true;
  }
  return false;
}

OracleConstants LiftedOracle::constants() const {
  OracleConstants c{0.0, 0.0, 0.0};
  for (const auto& t : terms_) {
    const auto k = t->constants();
    c.subgradient_bound = (c.subgradient_bound && k.subgradient_bound) ? std::optional(*c.subgradient_bound + *k.subgradient_bound) : std::nullopt;
    c.smoothness = (c.smoothness && k.smoothness) ? std::optional(*c.smoothness + *k.smoothness) : std::nullopt;
    c.variance.reset();
  }
  if (terms_.empty()) c.variance = 0.0;
  return c;
}

Problem build_lifted_problem(const MultiTermProblem& mtp, const Vector& y0) {
  if (mtp.prox_terms.empty()) {
    throw std::invalid_argument(
        "build_lifted_problem: no prox-handled terms; with only oracle terms use the splitting engine directly");
  }
  if (mtp.dim < 1 || y0.size() != mtp.dim) throw std::invalid_argument("build_lifted_problem: dimension mismatch");
  const std::size_t blocks = mtp.prox_terms.size() + 1;
  auto g = std::make_shared<ConsensusTerm>(mtp.dim, blocks);
  auto h = std::make_shared<ConcatTerm>(mtp.dim, mtp.prox_terms);
  auto f = std::make_shared<LiftedOracle>(mtp.dim, blocks, mtp.oracle_terms);
  return make_problem("lifted", g, h, f, lift(y0, blocks));
}

Vector extract_answer(const Vector& pt, Eigen::Index dim) { return block(pt, dim, 0); }

}  // namespace tos
