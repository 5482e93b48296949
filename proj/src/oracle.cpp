#include "tos/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tos {

double LinearMap::row_dot(Eigen::Index, const Vector&) const {
  throw std::logic_error("linear map does not support row access");
}

void LinearMap::add_row(Eigen::Index, double, Vector&) const {
  throw std::logic_error("linear map does not support row access");
}

double LinearMap::row_norm(Eigen::Index) const { throw std::logic_error("linear map does not support row access"); }

DenseMap::DenseMap(Matrix a) : a_(std::move(a)) {
  if (a_.rows() < 1 || a_.cols() < 1) throw std::invalid_argument("DenseMap: empty matrix");
  require_finite(a_, "DenseMap");
}

SelectionMap::SelectionMap(Eigen::Index n, std::vector<Eigen::Index> indices) : n_(n), indices_(std::move(indices)) {
  if (n < 1) throw std::invalid_argument("SelectionMap: empty domain");
  for (Eigen::Index i : indices_) {
    if (i < 0 || i >= n) throw std::invalid_argument("SelectionMap: index out of range");
  }
}

Vector SelectionMap::apply(const Vector& x) const {
  Vector out(static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t k = 0; k < indices_.size(); ++k) out(static_cast<Eigen::Index>(k)) = x(indices_[k]);
  return out;
}

Vector SelectionMap::adjoint(const Vector& r) const {
  Vector out = Vector::Zero(n_);
  for (std::size_t k = 0; k < indices_.size(); ++k) out(indices_[k]) += r(static_cast<Eigen::Index>(k));
  return out;
}

Convolution2d::Convolution2d(Eigen::Index rows, Eigen::Index cols, Matrix kernel)
    : rows_(rows), cols_(cols), kernel_(std::move(kernel)) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("Convolution2d: empty image");
  if (kernel_.rows() % 2 == 0 || kernel_.cols() % 2 == 0) {
    throw std::invalid_argument("Convolution2d: kernel dimensions must be odd");
  }
  if (kernel_.rows() > rows || kernel_.cols() > cols) {
    throw std::invalid_argument("Convolution2d: kernel larger than image");
  }
  require_finite(kernel_, "Convolution2d");
}

Vector Convolution2d::correlate(const Vector& x, bool flip) const {
  const Eigen::Index kr = kernel_.rows();
  const Eigen::Index kc = kernel_.cols();
  const Eigen::Index cr = kr / 2;
  const Eigen::Index cc = kc / 2;
  Vector out = Vector::Zero(rows_ * cols_);
  for (Eigen::Index i = 0; i < rows_; ++i) {
    for (Eigen::Index j = 0; j < cols_; ++j) {
      double acc = 0.0;
      for (Eigen::Index a = 0; a < kr; ++a) {
        const Eigen::Index si = i + a - cr;
        if (si < 0 || si >= rows_) continue;
        for (Eigen::Index b = 0; b < kc; ++b) {
          const Eigen::Index sj = j + b - cc;
          if (sj < 0 || sj >= cols_) continue;
          const double k = flip ? kernel_(kr - 1 - a, kc - 1 - b) : kernel_(a, b);
          acc += k * x(si * cols_ + sj);
        }
      }
      out(i * cols_ + j) = acc;
    }
  }
  return out;
}

Vector Convolution2d::apply(const Vector& x) const { return correlate(x, true); }

Vector Convolution2d::adjoint(const Vector& r) const { return correlate(r, false); }

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::least_squares: return "least_squares";
    case LossKind::lp_power: return "lp_power";
    case LossKind::l1_residual: return "l1_residual";
    case LossKind::l2_norm_residual: return "l2_norm_residual";
    case LossKind::logistic: return "logistic";
    case LossKind::hinge: return "hinge";
    case LossKind::huber: return "huber";
  }
  return "unknown";
}

LossKind loss_from_string(const std::string& s) {
  for (LossKind k : {LossKind::least_squares, LossKind::lp_power, LossKind::l1_residual, LossKind::l2_norm_residual,
                     LossKind::logistic, LossKind::hinge, LossKind::huber}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown loss kind '" + s + "'");
}

OracleEvaluation oracle_eval(const Oracle& o, const Vector& x, RandomStream* rng) {
  if (o.is_stochastic()) {
    if (rng == nullptr) throw std::invalid_argument("oracle_eval: stochastic oracle needs a random stream");
    return {o.value(x), o.direction(x, *rng)};
  }
  return {o.value(x), o.subgradient(x)};
}

namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double log1p_exp_neg(double m) {
  // log(1 + exp(-m)) without overflow
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double inv_one_plus_exp(double m) {
  // 1 / (1 + exp(m))
  if (m > 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

}  // namespace

FirstOrderOracle::FirstOrderOracle(LossKind kind, MapPtr a, Vector b, LossOptions options)
    : kind_(kind), a_(std::move(a)), b_(std::move(b)), options_(options) {
  if (!a_) throw std::invalid_argument("FirstOrderOracle: missing linear map");
  if (a_->rows() < 1) throw std::invalid_argument("FirstOrderOracle: empty dataset");
  if (b_.size() != a_->rows()) throw std::invalid_argument("FirstOrderOracle: data length does not match map rows");
  require_finite(b_, "FirstOrderOracle data");
  if (kind_ == LossKind::lp_power && !(options_.p >= 1.0 && options_.p <= 2.0)) {
    throw std::invalid_argument("FirstOrderOracle: p must lie in [1, 2]");
  }
  if (kind_ == LossKind::huber && !(options_.huber_delta > 0.0)) {
    throw std::invalid_argument("FirstOrderOracle: huber delta must be positive");
  }
  if (options_.batch < 0) throw std::invalid_argument("FirstOrderOracle: negative batch size");
  if (is_stochastic() && !a_->has_row_access()) {
    throw std::invalid_argument("FirstOrderOracle: stochastic sampling needs row access to the linear map");
  }
}

bool FirstOrderOracle::is_stochastic() const { return options_.batch > 0 && options_.batch < a_->rows(); }

bool FirstOrderOracle::mean_scaled() const {
  return kind_ == LossKind::logistic || kind_ == LossKind::hinge || kind_ == LossKind::huber;
}

FirstOrderOracle FirstOrderOracle::with_batch(Eigen::Index batch) const {
  LossOptions opts = options_;
  opts.batch = batch;
  FirstOrderOracle copy(kind_, a_, b_, opts);
  copy.constants_ = constants_;
  return copy;
}

double FirstOrderOracle::row_loss(Eigen::Index i, double zi) const {
  const double bi = b_(i);
  switch (kind_) {
    case LossKind::least_squares: return 0.5 * (zi - bi) * (zi - bi);
    case LossKind::lp_power: return std::pow(std::abs(zi - bi), options_.p) / options_.p;
    case LossKind::l1_residual: return std::abs(zi - bi);
    case LossKind::logistic: return log1p_exp_neg(bi * zi);
    case LossKind::hinge: return std::max(0.0, 1.0 - bi * zi);
    case LossKind::huber: {
      const double s = std::abs(bi - zi);
      const double d = options_.huber_delta;
      return s <= d ? 0.5 * s * s : d * (s - 0.5 * d);
    }
    case LossKind::l2_norm_residual: break;
  }
  throw std::logic_error("row_loss: not separable");
}

double FirstOrderOracle::psi(Eigen::Index i, double zi, double l2_norm) const {
  const double bi = b_(i);
  const double inv_n = 1.0 / static_cast<double>(b_.size());
  switch (kind_) {
    case LossKind::least_squares: return zi - bi;
    case LossKind::lp_power: {
      const double r = zi - bi;
      if (options_.p == 1.0) return sign0(r);
      return sign0(r) * std::pow(std::abs(r), options_.p - 1.0);
    }
    case LossKind::l1_residual: return sign0(zi - bi);
    case LossKind::l2_norm_residual: return l2_norm > 0.0 ? (zi - bi) / l2_norm : 0.0;
    case LossKind::logistic: return -bi * inv_one_plus_exp(bi * zi) * inv_n;
    case LossKind::hinge: return bi * zi < 1.0 ? -bi * inv_n : 0.0;
    case LossKind::huber: {
      const double d = options_.huber_delta;
      return -std::clamp(bi - zi, -d, d) * inv_n;
    }
  }
  return 0.0;
}

double FirstOrderOracle::value(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("oracle: dimension mismatch");
  const Vector z = a_->apply(x);
  if (kind_ == LossKind::l2_norm_residual) return (z - b_).norm();
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += row_loss(i, z(i));
  return mean_scaled() ? total / static_cast<double>(z.size()) : total;
}

Vector FirstOrderOracle::subgradient(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("oracle: dimension mismatch");
  const Vector z = a_->apply(x);
  const double nrm = kind_ == LossKind::l2_norm_residual ? (z - b_).norm() : 0.0;
  Vector weights(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) weights(i) = psi(i, z(i), nrm);
  return a_->adjoint(weights);
}

Vector FirstOrderOracle::direction(const Vector& x, RandomStream& rng) const {
  if (!is_stochastic()) return subgradient(x);
  if (x.size() != dim()) throw std::invalid_argument("oracle: dimension mismatch");
  const Eigen::Index n_rows = a_->rows();
  const double nrm = kind_ == LossKind::l2_norm_residual ? (a_->apply(x) - b_).norm() : 0.0;
  const double scale = static_cast<double>(n_rows) / static_cast<double>(options_.batch);
  Vector out = Vector::Zero(dim());
  for (Eigen::Index k = 0; k < options_.batch; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n_rows)));
    const double w = psi(i, a_->row_dot(i, x), nrm);
    if (w != 0.0) a_->add_row(i, scale * w, out);
  }
  return out;
}

}  // namespace tos
