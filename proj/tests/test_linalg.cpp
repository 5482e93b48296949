#include <fstream>

#include <doctest.h>
#include <json.hpp>

#include "tos/linalg.hpp"
#include "tos/random.hpp"

using namespace tos;

TEST_CASE("svd of the identity") {
  const Svd d = dense_svd(Matrix::Identity(3, 3));
  CHECK((d.s - Vector::Ones(3)).norm() < 1e-14);
}

TEST_CASE("svd of a diagonal matrix") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0, m(1, 1) = 2.0;
  const Svd d = dense_svd(m);
  CHECK(d.s(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(d.s(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK((d.u.cwiseAbs() - Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK((d.v.cwiseAbs() - Matrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("svd reconstructs random matrices") {
  RandomStream rng(7);
  const Matrix m = draw_gaussian(rng, 4, 3);
  const Svd d = dense_svd(m);
  CHECK((d.u * d.s.asDiagonal() * d.v.transpose() - m).norm() <= 1e-10 * m.norm());

  for (int trial = 0; trial < 1000; ++trial) {
    const auto rows = 1 + static_cast<Eigen::Index>(rng.uniform_index(7));
    const auto cols = 1 + static_cast<Eigen::Index>(rng.uniform_index(7));
    Matrix a = draw_gaussian(rng, rows, cols);
    if (trial % 5 == 0 && cols > 1) a.col(cols - 1) = a.col(0);  // rank deficient
    const Svd s = dense_svd(a);
    const auto k = std::min(rows, cols);
    REQUIRE(s.s.size() == k);
    CHECK((s.u * s.s.asDiagonal() * s.v.transpose() - a).norm() <= 1e-10 * (1.0 + a.norm()));
    CHECK((s.u.transpose() * s.u - Matrix::Identity(k, k)).norm() < 1e-10);
    CHECK((s.v.transpose() * s.v - Matrix::Identity(k, k)).norm() < 1e-10);
    for (Eigen::Index i = 0; i + 1 < k; ++i) CHECK(s.s(i) >= s.s(i + 1));
    CHECK(s.s.minCoeff() >= 0.0);
    // singular values against Eigen's solver
    Eigen::JacobiSVD<Eigen::MatrixXd> ref(a);
    CHECK((ref.singularValues() - s.s).norm() < 1e-10 * (1.0 + a.norm()));
  }
}

TEST_CASE("norms") {
  Matrix m = Matrix::Zero(2, 3);
  m(0, 0) = 3.0, m(1, 2) = -4.0;
  CHECK(nuclear_norm(m) == doctest::Approx(7.0));
  CHECK(spectral_norm(m) == doctest::Approx(4.0));
}

TEST_CASE("flatten is row major") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Vector v = flatten(m);
  for (int i = 0; i < 6; ++i) CHECK(v(i) == i + 1);
  CHECK(unflatten(v, 2, 3) == m);
  CHECK_THROWS_AS(unflatten(v, 4, 2), std::invalid_argument);
}

TEST_CASE("non-finite input is rejected") {
  Vector v = Vector::Zero(3);
  v(1) = std::nan("");
  CHECK_FALSE(all_finite(v));
  CHECK_THROWS_AS(require_finite(v, "v"), std::invalid_argument);
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(dense_svd(m), std::invalid_argument);
}

TEST_CASE("random streams are reproducible") {
  RandomStream a(3), b(3);
  const Vector first = draw_gaussian(a, 5);
  const Vector second = draw_gaussian(a, 5);
  CHECK((first - second).norm() > 0.0);
  CHECK(first == draw_gaussian(b, 5));
  CHECK_THROWS_AS(draw_gaussian(a, 0), std::invalid_argument);

  RandomStream s1 = RandomStream(3).split(1), s2 = RandomStream(3).split(2);
  CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("seed 0 matches the recorded first draws") {
  std::ifstream in(std::string(TOS_FIXTURE_DIR) + "/rng_seed0.json");
  REQUIRE(in);
  const auto pin = nlohmann::json::parse(in);
  CHECK(RandomStream(0).next_u64() == pin["first_u64"].get<std::uint64_t>());
  CHECK(RandomStream(0).uniform() == pin["first_uniform"].get<double>());
  CHECK(RandomStream(0).gaussian() == pin["first_gaussian"].get<double>());
}

TEST_CASE("gaussian moments") {
  RandomStream rng(1);
  const Vector x = draw_gaussian(rng, 100000);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("uniform index covers its range evenly") {
  RandomStream rng(2);
  std::vector<int> counts(7, 0);
  for (int k = 0; k < 70000; ++k) ++counts[rng.uniform_index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
}
