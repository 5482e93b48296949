#include <cstdio>
#include <fstream>

#include <doctest.h>

#include "oracles.hpp"
#include "tos/harness.hpp"
#include "tos/problems.hpp"

using namespace tos;

namespace {

const std::string fixtures = TOS_FIXTURE_DIR;

// Isotonic least squares by KKT enumeration: each order constraint is either
// inactive (multiplier 0) or active (x_i = x_{i+1}, multiplier >= 0).
double isotonic_kkt(const Matrix& a, const Vector& b) {
  const Eigen::Index n = a.cols();
  const Eigen::Index m = n - 1;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask >> i & 1u) act.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
    kkt.topLeftCorner(n, n) = a.transpose() * a;
    rhs.head(n) = a.transpose() * b;
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index i = act[static_cast<std::size_t>(r)];
      // row of D: x_i - x_{i+1} <= 0
      kkt(n + r, i) = kkt(i, n + r) = 1.0;
      kkt(n + r, i + 1) = kkt(i + 1, n + r) = -1.0;
    }
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    const Vector x = sol.head(n);
    bool ok = sol.tail(k).minCoeff() >= -1e-10 || k == 0;
    for (Eigen::Index i = 0; i < m; ++i) ok = ok && x(i) <= x(i + 1) + 1e-10;
    if (ok) best = std::min(best, 0.5 * (a * x - b).squaredNorm());
  }
  return best;
}

double objective_at_z(const BuiltProblem& bp, const StepSizePolicy& policy, std::size_t iters) {
  RunOptions o;
  o.iters = iters;
  const RunResult r = run(bp.problem, policy, o);
  REQUIRE(r.ok());
  return bp.problem.objective(r.state.z);
}

}  // namespace

TEST_CASE("isotonic defaults") {
  const BuiltProblem bp = build(default_spec("isotonic"));
  CHECK(bp.problem.dim() == 200);
  CHECK(bp.loss->map().rows() == 100);
  REQUIRE(bp.ground_truth);
  const Vector& x = *bp.ground_truth;
  CHECK(bp.problem.g->distance(x) == 0.0);
  CHECK(bp.problem.h->distance(x) == 0.0);
  CHECK(bp.spec.g_f.has_value());
  CHECK_THROWS_AS(make_isotonic(10, 10, 2.5, 0), std::invalid_argument);
}

TEST_CASE("tiny isotonic instance against enumeration") {
  const BuiltProblem bp = make_isotonic(6, 4, 2.0, 3, 1.0);
  const auto& a = dynamic_cast<const DenseMap&>(bp.loss->map()).matrix();
  const double f_star = isotonic_kkt(a, bp.loss->data());
  CHECK(reference_solution(bp, 0).f_star == doctest::Approx(f_star).epsilon(1e-10));

  RunOptions o;
  o.iters = 200000;
  const RunResult r = run(bp.problem, Constant{0.5, 1.0}, o);
  const Vector x = proj_monotone(r.state.z);
  CHECK(std::abs(bp.problem.f->value(x) - f_star) <= 1e-6);
}

TEST_CASE("portfolio loader and feasibility") {
  const Matrix r = load_returns_csv(fixtures + "/returns_507x30.csv");
  CHECK(r.rows() == 507);
  CHECK(r.cols() == 30);
  const BuiltProblem bp = make_portfolio(r, LossKind::least_squares);
  CHECK(bp.problem.dim() == 30);

  const Matrix same = Matrix::Constant(20, 4, 1.01);
  const BuiltProblem flat = make_portfolio(same, LossKind::l1_residual);
  const Vector uniform = Vector::Constant(4, 0.25);
  CHECK(flat.problem.g->distance(uniform) <= 1e-12);
  CHECK(flat.problem.h->distance(uniform) <= 1e-12);

  const std::string ragged = "/tmp/tos_ragged.csv";
  std::ofstream(ragged) << "1,2,3\n4,5\n";
  CHECK_THROWS(load_returns_csv(ragged));
  std::ofstream("/tmp/tos_empty.csv") << "";
  CHECK_THROWS(load_returns_csv("/tmp/tos_empty.csv"));
  CHECK_THROWS(load_returns_csv("/nonexistent/file.csv"));
  CHECK_THROWS_AS(make_portfolio(Matrix(0, 0), LossKind::least_squares), std::invalid_argument);
}

TEST_CASE("three-asset portfolio against a simplex grid") {
  const Matrix r = synthetic_returns(60, 3, 4);
  for (LossKind kind : {LossKind::least_squares, LossKind::l1_residual}) {
    const BuiltProblem bp = make_portfolio(r, kind);
    const Vector a_av = r.colwise().mean().transpose();
    const double target = a_av.mean();
    double grid = std::numeric_limits<double>::infinity();
    const int steps = 1000;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; i + j <= steps; ++j) {
        Vector x(3);
        x << i / double(steps), j / double(steps), (steps - i - j) / double(steps);
        if (a_av.dot(x) >= target) grid = std::min(grid, bp.problem.f->value(x));
      }
    }
    RunOptions o;
    o.iters = 200000;
    const RunResult run_r = run(bp.problem, AdapTos{1.0, 1.0, false}, o);
    const double f = bp.problem.f->value(run_r.state.z);
    INFO(to_string(kind));
    CHECK(std::abs(f - grid) <= 1e-4);
    CHECK(reference_solution(bp, 0).f_star <= grid + 1e-12);
  }
}

TEST_CASE("group lasso builder") {
  const ProblemSpec spec = default_spec("grouplasso");
  CHECK(spec.n == 1002);
  CHECK(spec.m == 100);
  const auto groups = overlapping_groups(1002, 10, 2);
  CHECK(groups.size() == 125);
  CHECK(groups[1].front() == 8);
  CHECK_THROWS_AS(overlapping_groups(12, 10, 2), std::invalid_argument);

  GroupLassoOptions go;
  go.n = 12, go.group_size = 7, go.overlap = 2, go.lambda = 0.0, go.samples = 30, go.seed = 2;
  const BuiltProblem bp = make_group_lasso(go);
  // lambda = 0: both proxes are the identity and the run is plain gradient descent
  RunOptions o;
  o.iters = 50;
  const RunResult r = run(bp.problem, Diminishing{1.0}, o);
  Vector y = bp.problem.y0;
  for (std::size_t t = 0; t < 50; ++t) y -= 1.0 / std::sqrt(double(t) + 1.0) * bp.loss->subgradient(y);
  CHECK((r.state.y - y).norm() <= 1e-12);
}

TEST_CASE("sparse plus low-rank builder") {
  const BuiltProblem bp = build(default_spec("sparselowrank"));
  CHECK(bp.rows == 20);
  CHECK(bp.cols == 20);
  CHECK(bp.loss->map().rows() == 100);
  const Matrix truth = unflatten(*bp.ground_truth, 20, 20);
  CHECK((truth - truth.transpose()).norm() == 0.0);

  const BuiltProblem heavy = make_sparse_lowrank(4, 30, 1e6, 1);
  RunOptions o;
  o.iters = 200;
  const RunResult r = run(heavy.problem, AdapTos{1.0, 1.0, false}, o);
  CHECK(r.state.z.cwiseAbs().maxCoeff() <= 1e-6);

  const BuiltProblem small = make_sparse_lowrank(4, 30, 0.1, 2);
  const double short_run = objective_at_z(small, AdapTos{1.0, 1.0, false}, 100000);
  const double reference = objective_at_z(small, Diminishing{1.0}, 1000000);
  CHECK(std::abs(short_run - reference) / reference <= 1e-3);
}

TEST_CASE("inpainting builder") {
  const Matrix img = synthetic_image(6, 5);
  const BuiltProblem none = make_inpainting(img, Matrix::Zero(6, 5), 0.0, LossKind::l1_residual, 0.0, 1);
  Vector probe = Vector::Constant(30, 0.3);
  RandomStream rng(1);
  CHECK(none.problem.f->direction(probe, rng).norm() == 0.0);
  RunOptions o;
  o.iters = 500;
  const RunResult r = run(none.problem, AdapTos{}, o);
  CHECK(none.problem.h->distance(r.state.x) <= 1e-9);
  CHECK(none.problem.g->distance(r.state.z) <= 1e-9);
  CHECK_THROWS_AS(make_inpainting(img, Matrix::Zero(5, 5), 0.0, LossKind::l1_residual, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_inpainting(img, Matrix(0, 0), 0.0, LossKind::l1_residual, 0.0, 1), std::invalid_argument);

  // noiseless, fully observed, radius at least the nuclear norm: the image itself is optimal
  const BuiltProblem full = make_inpainting(img, Matrix::Ones(6, 5), 0.0, LossKind::l1_residual, nuclear_norm(img) + 1e-9, 1);
  const Vector x = flatten(img);
  CHECK(full.problem.f->value(x) == 0.0);
  CHECK(full.problem.g->value(x) == 0.0);
  CHECK(full.problem.h->value(x) == 0.0);
}

TEST_CASE("inpainting recovery is stable in the iteration count") {
  Vector u(8), v(8);
  for (int i = 0; i < 8; ++i) u(i) = 0.3 + 0.08 * i, v(i) = 0.9 - 0.05 * i;
  const Matrix img = u * v.transpose();
  const Matrix mask = random_mask(8, 8, 0.5, 3);
  const BuiltProblem bp = make_inpainting(img, mask, 0.0, LossKind::l2_norm_residual, 0.0, 3);
  auto recovery = [&](std::size_t iters) {
    RunOptions o;
    o.iters = iters;
    const RunResult r = run(bp.problem, AdapTos{1.0, 1.0, false}, o);
    return (r.state.z - flatten(img)).norm() / flatten(img).norm();
  };
  const double err = recovery(50000);
  const double ref = recovery(500000);
  CHECK(err <= ref + 1e-3);
}

TEST_CASE("tv deblurring builder") {
  const Matrix img = blocky_image(6, 7, 2);
  Matrix identity = Matrix::Zero(1, 1);
  identity(0, 0) = 1.0;
  const BuiltProblem plain = make_tv_deblur(img, identity, 0.0);
  RunOptions o;
  o.iters = 100;
  const RunResult r = run(plain.problem, AdapTos{}, o);
  CHECK((r.state.z - flatten(img)).norm() <= 1e-12);
  CHECK(plain.problem.objective(r.state.z) <= 1e-24);

  const TvTerm rows(6, 7, 0.3, TvAxis::rows), cols(6, 7, 0.3, TvAxis::cols);
  const Vector flat = Vector::Constant(42, 0.4);
  CHECK((rows.prox(flat, 1.0) - flat).norm() <= 1e-15);
  CHECK((cols.prox(flat, 1.0) - flat).norm() <= 1e-15);

  RandomStream rng(5);
  const BuiltProblem bp = make_tv_deblur(blocky_image(8, 8, 1), box_kernel(3), 1e-3);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector x = draw_gaussian(rng, 64);
    const Vector fd = oracle::numeric_gradient([&](const Vector& v) { return bp.loss->value(v); }, x);
    const Vector g = bp.loss->subgradient(x);
    CHECK((fd - g).norm() / g.norm() <= 1e-5);
  }
  CHECK_THROWS_AS(box_kernel(2), std::invalid_argument);
}

TEST_CASE("pgm round trip") {
  const Image ramp = read_pgm(fixtures + "/ramp_8x8.pgm");
  CHECK(ramp.rows == 8);
  CHECK(ramp.cols == 8);
  CHECK(ramp.pixels(0, 0) == 0.0);
  CHECK(ramp.pixels(7, 7) == 1.0);
  const std::string path = "/tmp/tos_roundtrip.pgm";
  write_pgm(path, ramp.pixels);
  const Image back = read_pgm(path);
  CHECK((back.pixels - ramp.pixels).cwiseAbs().maxCoeff() <= 0.5 / 255.0);
  std::ofstream("/tmp/tos_bad.pgm") << "P6\n1 1\n255\n";
  CHECK_THROWS(read_pgm("/tmp/tos_bad.pgm"));
}

TEST_CASE("specs, fingerprints and dispatch") {
  ProblemSpec s = default_spec("portfolio");
  s.seed = 3;
  s.dataset = "prices.csv";
  const nlohmann::json j = s;
  CHECK(j.get<ProblemSpec>() == s);
  CHECK(fingerprint(s) == fingerprint(j.get<ProblemSpec>()));
  ProblemSpec t = s;
  t.seed = 4;
  CHECK(fingerprint(s) != fingerprint(t));
  t = s;
  t.g_f = 3.0;
  CHECK(fingerprint(s) == fingerprint(t));
  CHECK(fingerprint(s).size() == 16);
  CHECK_THROWS_AS(default_spec("nope"), std::invalid_argument);
  s.name = "nope";
  CHECK_THROWS_AS(build(s), std::invalid_argument);

  for (const char* name : {"isotonic", "portfolio", "grouplasso", "sparselowrank", "inpainting", "tvdeblur"}) {
    ProblemSpec small = default_spec(name);
    small.m = std::min<Eigen::Index>(small.m, 12);
    small.n = std::string(name) == "grouplasso" ? 12 : std::min<Eigen::Index>(small.n, 8);
    if (std::string(name) == "grouplasso") small.group_size = 7;
    const BuiltProblem bp = build(small);
    INFO(name);
    CHECK(bp.problem.dim() > 0);
    RunOptions o;
    o.iters = 20;
    CHECK(run(bp.problem, AdapTos{}, o).ok());
  }
}
