#include <doctest.h>

#include "oracles.hpp"
#include "tos/random.hpp"
#include "tos/terms.hpp"

using namespace tos;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vector diag_flat(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a, m(1, 1) = b;
  return flatten(m);
}

std::vector<Vector> probes(RandomStream& rng, Eigen::Index n, int count, double scale = 2.0) {
  std::vector<Vector> out;
  for (int k = 0; k < count; ++k) out.push_back(scale * draw_gaussian(rng, n));
  return out;
}

}  // namespace

TEST_CASE("soft thresholding") {
  CHECK(prox_l1(vec({0, 0}), 1.0) == vec({0, 0}));
  CHECK(prox_l1(vec({2, -0.5}), 1.0) == vec({1, 0}));
  const Vector x = vec({0.3, -1.7, 4});
  // grid with step 1e-4 around each coordinate
  for (Eigen::Index i = 0; i < 3; ++i) {
    double best = 0.0, best_v = std::numeric_limits<double>::infinity();
    for (double y = -5.0; y <= 5.0; y += 1e-4) {
      const double v = 0.25 * std::abs(y) + 0.5 * (y - x(i)) * (y - x(i));
      if (v < best_v) best_v = v, best = y;
    }
    CHECK(std::abs(prox_l1(x, 0.25)(i) - best) <= 1e-4);
  }
  CHECK((prox_l1(x, 0.25) - oracle::prox_l1(x, 0.25)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(prox_l1(x, 0.0), std::invalid_argument);
}

TEST_CASE("group soft thresholding") {
  const std::vector<IndexBlock> one{{0, 1}};
  const std::vector<double> w{1.0};
  CHECK(prox_group_l2(vec({3, 4}), one, w, 5.0).norm() == 0.0);
  CHECK((prox_group_l2(vec({3, 4}), one, w, 2.5) - vec({1.5, 2})).norm() < 1e-15);

  RandomStream rng(3);
  const std::vector<IndexBlock> groups{{0, 2, 4}, {1, 5}};
  const std::vector<double> weights{0.7, 1.3};
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = draw_gaussian(rng, 6);
    CHECK((prox_group_l2(x, groups, weights, 0.6) - oracle::prox_group_l2(x, groups, weights, 0.6)).cwiseAbs().maxCoeff() <
          1e-6);
  }
  // coordinate 3 belongs to no group
  CHECK(prox_group_l2(vec({1, 1, 1, 9, 1, 1}), groups, weights, 0.6)(3) == 9.0);
  CHECK_THROWS_AS(prox_group_l2(vec({1, 1, 1}), {{0, 1}, {1, 2}}, std::vector<double>{1, 1}, 1.0), std::invalid_argument);
}

TEST_CASE("nuclear prox") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0, m(1, 1) = 1.0;
  const Matrix out = prox_nuclear(m, 2.0);
  CHECK((flatten(out) - diag_flat(1, 0)).norm() < 1e-14);
  CHECK(prox_nuclear(Matrix::Zero(3, 2), 1.0).norm() == 0.0);

  RandomStream rng(4);
  const NuclearTerm term(4, 4, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = draw_gaussian(rng, 4, 4);
    const Matrix sym = a + a.transpose();
    CHECK(prox_optimality_check(term, flatten(sym), 0.8, probes(rng, 16, 50)) <= 1e-9);
    const Vector x = draw_gaussian(rng, 16);
    CHECK((term.prox(x, 0.8) - oracle::prox_nuclear(x, 4, 4, 0.8)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("box projection") {
  CHECK(proj_box(vec({0.5}), 0.0, 1.0) == vec({0.5}));
  CHECK(proj_box(vec({-3, 7}), 0.0, 1.0) == vec({0, 1}));
  RandomStream rng(5);
  const Vector x = 3.0 * draw_gaussian(rng, 8);
  const Vector p = proj_box(x, -1.0, 2.0);
  CHECK(proj_box(p, -1.0, 2.0) == p);
  CHECK((p - oracle::proj_box(x, Vector::Constant(8, -1.0), Vector::Constant(8, 2.0))).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(proj_box(x, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("simplex projection") {
  CHECK((proj_simplex(vec({0.5, 0.5})) - vec({0.5, 0.5})).norm() < 1e-15);
  CHECK((proj_simplex(vec({2, 0})) - vec({1, 0})).norm() < 1e-15);
  CHECK((proj_simplex(vec({0.6, 0.6})) - vec({0.5, 0.5})).norm() < 1e-15);
  RandomStream rng(6);
  const SimplexIndicator term;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = 2.0 * draw_gaussian(rng, 7);
    const Vector p = proj_simplex(x);
    CHECK((p - oracle::proj_simplex(x)).cwiseAbs().maxCoeff() < 1e-9);
    std::vector<Vector> feasible;
    for (int k = 0; k < 20; ++k) feasible.push_back(proj_simplex(3.0 * draw_gaussian(rng, 7)));
    CHECK(prox_optimality_check(term, x, 1.0, feasible) <= 1e-9);
  }
}

TEST_CASE("halfspace projection") {
  CHECK(proj_halfspace(vec({2, 5}), vec({1, 0}), 1.0) == vec({2, 5}));
  CHECK((proj_halfspace(vec({0, 0}), vec({1, 0}), 1.0) - vec({1, 0})).norm() < 1e-15);
  RandomStream rng(8);
  const Vector a = draw_gaussian(rng, 5);
  const double b = 1.5;
  const Vector x = -draw_gaussian(rng, 5) - a;
  const Vector p = proj_halfspace(x, a, b);
  CHECK(a.dot(p) >= b - 1e-12);
  for (int k = 0; k < 100; ++k) {
    const Vector y = proj_halfspace(3.0 * draw_gaussian(rng, 5), a, b);
    CHECK((x - p).dot(y - p) <= 1e-12);
  }
  CHECK_THROWS_AS(proj_halfspace(x, Vector::Zero(5), b), std::invalid_argument);
}

TEST_CASE("nuclear ball projection") {
  RandomStream rng(9);
  Vector x = draw_gaussian(rng, 6);
  const double nn = nuclear_norm(unflatten(x, 2, 3));
  CHECK((flatten(proj_nuclear_ball(unflatten(x, 2, 3), nn + 0.1)) - x).norm() < 1e-12);
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0, m(1, 1) = 1.0;
  CHECK((flatten(proj_nuclear_ball(m, 2.0)) - diag_flat(2, 0)).norm() < 1e-12);
  CHECK(proj_nuclear_ball(Matrix::Zero(2, 2), 1.0).norm() == 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    x = 2.0 * draw_gaussian(rng, 12);
    const Vector p = flatten(proj_nuclear_ball(unflatten(x, 3, 4), 1.0));
    CHECK((p - oracle::proj_nuclear_ball(x, 3, 4, 1.0)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("pairwise order projection") {
  const std::vector<IndexPair> one{{0, 1}};
  CHECK(proj_pairwise_order(vec({1, 2}), one) == vec({1, 2}));
  CHECK(proj_pairwise_order(vec({2, 1}), one) == vec({1.5, 1.5}));
  const std::vector<IndexPair> two{{0, 1}, {2, 3}};
  CHECK(proj_pairwise_order(vec({5, 1, 0, 4}), two) == vec({3, 3, 0, 4}));
  const std::vector<IndexPair> shared{{0, 1}, {1, 2}};
  CHECK_THROWS_AS(proj_pairwise_order(vec({1, 2, 3}), shared), std::invalid_argument);
}

TEST_CASE("monotone projection") {
  CHECK((proj_monotone(vec({3, 1, 2})) - vec({2, 2, 2})).norm() < 1e-15);
  CHECK(proj_monotone(vec({1, 2, 3})) == vec({1, 2, 3}));
}

TEST_CASE("1-D total variation prox") {
  CHECK(prox_tv_1d(Vector::Constant(5, 2.0), 0.7) == Vector::Constant(5, 2.0));
  CHECK((prox_tv_1d(vec({0, 1}), 0.2) - vec({0.2, 0.8})).norm() < 1e-15);
  CHECK((prox_tv_1d(vec({0, 1}), 0.6) - vec({0.5, 0.5})).norm() < 1e-15);
  RandomStream rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = draw_gaussian(rng, 6);
    CHECK((prox_tv_1d(x, 0.3) - oracle::prox_tv_1d(x, 0.3)).cwiseAbs().maxCoeff() < 1e-6);
  }
  const Vector x = draw_gaussian(rng, 40);
  const TvTerm term(1, 40, 0.5, TvAxis::rows);
  CHECK(prox_optimality_check(term, x, 1.0, probes(rng, 40, 50)) <= 1e-9);
}

TEST_CASE("prox optimality check has teeth") {
  RandomStream rng(11);
  const L1Term l1(1.0);
  const Vector x = draw_gaussian(rng, 5);
  CHECK(prox_optimality_check(l1, x, 0.5, probes(rng, 5, 100)) <= 1e-9);

  struct Shifted final : ProxTerm {
    TermKind kind() const override { return TermKind::l1; }
    std::string name() const override { return "shifted"; }
    double value(const Vector& v) const override { return v.lpNorm<1>(); }
    Vector prox(const Vector& v, double gamma) const override {
      return (prox_l1(v, gamma).array() + 0.1).matrix();
    }
  } bad;
  std::vector<Vector> near = probes(rng, 5, 100);
  near.push_back(prox_l1(x, 0.5));
  CHECK(prox_optimality_check(bad, x, 0.5, near) > 0.01);
}

TEST_CASE("terms validate their inputs") {
  CHECK_THROWS_AS(L1Term(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(L1Term(1.0).prox(vec({1}), -1.0), std::invalid_argument);
  CHECK_THROWS_AS(NuclearTerm(2, 2, 1.0).prox(vec({1, 2, 3}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BoxIndicator(vec({1}), vec({0})), std::invalid_argument);
  CHECK_THROWS_AS(NuclearBallIndicator(2, 2, -1.0), std::invalid_argument);
}

TEST_CASE("indicator values and distances") {
  const BoxIndicator box(2, 0.0, 1.0);
  CHECK(box.value(vec({0.5, 0.5})) == 0.0);
  CHECK(std::isinf(box.value(vec({2, 0.5}))));
  CHECK(box.penalty(vec({2, 0.5})) == 0.0);
  CHECK(box.distance(vec({2, 0.5})) == doctest::Approx(1.0));
  const L1Term l1(2.0);
  CHECK(l1.value(vec({1, -2})) == doctest::Approx(6.0));
  CHECK(l1.distance(vec({1, -2})) == 0.0);
}

TEST_CASE("firm nonexpansiveness on random pairs") {
  RandomStream rng(12);
  const GroupL2Term term({{0, 1, 2}, {3, 4}}, {1.0, 2.0}, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = draw_gaussian(rng, 6), y = draw_gaussian(rng, 6);
    CHECK(firm_nonexpansive_gap(term, x, y, 0.7) <= 1e-12);
  }
}
