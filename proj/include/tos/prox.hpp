#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tos/linalg.hpp"

namespace tos {

using IndexBlock = std::vector<Eigen::Index>;
using IndexPair = std::pair<Eigen::Index, Eigen::Index>;

/// Soft thresholding, sign(x) * max(|x| - t, 0). Requires t > 0.
Vector prox_l1(const Vector& x, double t);

/// Block soft thresholding over disjoint `groups`; block g shrinks by t * weights[g].
/// Coordinates outside every block pass through. Overlapping blocks are rejected.
Vector prox_group_l2(const Vector& x, const std::vector<IndexBlock>& groups, std::span<const double> weights,
                     double t);

/// Singular value soft thresholding.
Matrix prox_nuclear(const Matrix& x, double t);

Vector proj_box(const Vector& x, const Vector& lo, const Vector& hi);
Vector proj_box(const Vector& x, double lo, double hi);

/// Euclidean projection onto the unit simplex (sort and threshold).
Vector proj_simplex(const Vector& x);

/// Projection onto {s >= 0, sum(s) <= radius}.
Vector proj_capped_nonneg_l1(const Vector& s, double radius);

/// Projection onto {y : <a, y> >= b}.
Vector proj_halfspace(const Vector& x, const Vector& a, double b);

/// Projection onto {X : ||X||_* <= radius}.
Matrix proj_nuclear_ball(const Matrix& x, double radius);

/// Projection onto {x_i <= x_j for each (i, j) in pairs}; pairs must not share indices.
Vector proj_pairwise_order(const Vector& x, std::span<const IndexPair> pairs);

/// Projection onto the monotone cone x_0 <= x_1 <= ... (pool adjacent violators).
Vector proj_monotone(const Vector& x);

/// Exact minimizer of t * sum |y_{i+1} - y_i| + 1/2 ||y - x||^2.
Vector prox_tv_1d(const Vector& x, double t);

}  // namespace tos
