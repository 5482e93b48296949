#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "tos/linalg.hpp"
#include "tos/oracle.hpp"
#include "tos/splitting.hpp"

namespace tos {

/// Everything needed to regenerate a benchmark instance.
///
/// Field meaning per problem:
///   isotonic       m x n design, p-th power loss, noise = measurement noise level
///   portfolio      m days x n assets (synthetic unless dataset is set), loss least_squares | l1_residual
///   grouplasso     m samples, n features, loss logistic | hinge
///   sparselowrank  m measurements of an n x n matrix, noise = measurement noise level
///   inpainting     m x n image, loss l1_residual | l2_norm_residual | least_squares,
///                  noise = salt-and-pepper density, lambda <= 0 uses the nuclear norm of the clean image
///   tvdeblur       m x n image, kernel_size box blur, noise = additive noise level
struct ProblemSpec {
  std::string name = "isotonic";
  Eigen::Index m = 100;
  Eigen::Index n = 200;
  double p = 1.0;
  std::string loss;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> dataset;
  Eigen::Index group_size = 10;
  Eigen::Index overlap = 2;
  double noise = 0.1;
  double observed_fraction = 0.5;
  double huber_delta = 1.0;
  Eigen::Index kernel_size = 3;
  Eigen::Index batch = 0;
  // Filled in by the builders.
  std::optional<double> g_f;
  std::optional<double> l_f;

  bool operator==(const ProblemSpec&) const = default;
};

void to_json(nlohmann::json& j, const ProblemSpec& s);
void from_json(const nlohmann::json& j, ProblemSpec& s);

/// Default spec for a problem name.
ProblemSpec default_spec(const std::string& name);

/// Stable 64-bit hash of the serialized spec, as 16 hex digits.
std::string fingerprint(const ProblemSpec& spec);

struct BuiltProblem {
  ProblemSpec spec;
  Problem problem;
  std::shared_ptr<const FirstOrderOracle> loss;  // null when the problem has no data term
  std::optional<Vector> ground_truth;
  Eigen::Index rows = 0, cols = 0;  // image / matrix shape for matrix-valued problems
};

BuiltProblem make_isotonic(Eigen::Index m, Eigen::Index n, double p, std::uint64_t seed, double noise = 0.1);

/// Returns matrix (days x assets) with g = simplex, h = {<a_av, x> >= mean(a_av)}.
BuiltProblem make_portfolio(const Matrix& returns, LossKind loss, Eigen::Index batch = 0);
/// Net daily returns around 0 with per-asset drift and volatility.
Matrix synthetic_returns(Eigen::Index days, Eigen::Index assets, std::uint64_t seed);
/// CSV, one row per day and one column per asset; a non-numeric first line is taken as a header.
Matrix load_returns_csv(const std::string& path);

struct GroupLassoOptions {
  Eigen::Index n = 1002;
  Eigen::Index samples = 100;
  Eigen::Index group_size = 10;
  Eigen::Index overlap = 2;
  double lambda = 1e-3;
  LossKind loss = LossKind::logistic;
  std::uint64_t seed = 0;
};

/// Overlapping groups [k s, k s + group_size) with stride s = group_size - overlap.
std::vector<IndexBlock> overlapping_groups(Eigen::Index n, Eigen::Index group_size, Eigen::Index overlap);
BuiltProblem make_group_lasso(const GroupLassoOptions& o);

BuiltProblem make_sparse_lowrank(Eigen::Index n, Eigen::Index measurements, double lambda, std::uint64_t seed,
                                 double noise = 1.0, double huber_delta = 1.0);

struct Image {
  Eigen::Index rows = 0, cols = 0;
  Matrix pixels;  // values in [0, 1]
};

Image read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Matrix& pixels);
/// Smooth low-rank test image with values in [0.2, 0.8].
Matrix synthetic_image(Eigen::Index rows, Eigen::Index cols);
/// Piecewise-constant blocks, values in [0, 1].
Matrix blocky_image(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

/// mask(i, j) != 0 marks an observed pixel. Observed pixels are flipped to 0
/// or 1 with probability density / 2 each.
BuiltProblem make_inpainting(const Matrix& image, const Matrix& mask, double noise_density, LossKind loss,
                             double lambda, std::uint64_t seed);
Matrix random_mask(Eigen::Index rows, Eigen::Index cols, double observed_fraction, std::uint64_t seed);

/// 1/2 ||K * X - Y||^2 + lambda TV_rows(X) + lambda TV_cols(X)
BuiltProblem make_tv_deblur(const Matrix& blurred, const Matrix& kernel, double lambda);
Matrix box_kernel(Eigen::Index size);

/// Dispatches on spec.name; throws std::invalid_argument for unknown names.
BuiltProblem build(const ProblemSpec& spec);

}  // namespace tos
