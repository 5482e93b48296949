#pragma once

#include <cstdint>
#include <optional>

#include "tos/linalg.hpp"

namespace tos {

/// Counter-based random stream.
///
/// Draw k is a pure function of (seed, k), so a stream's output depends on
/// nothing but its seed. Child streams for independent runs come from
/// split(), which hashes the parent seed with a stream id.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double gaussian();

  RandomStream split(std::uint64_t stream_id) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

/// iid standard-normal vector / matrix; zero-size shapes are rejected.
Vector draw_gaussian(RandomStream& rng, Eigen::Index n);
Matrix draw_gaussian(RandomStream& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace tos
