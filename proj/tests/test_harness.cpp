#include <cmath>
#include <filesystem>
#include <sstream>

#include <doctest.h>

#include "tos/harness.hpp"

using namespace tos;

TEST_CASE("trace csv round trip") {
  const BuiltProblem bp = make_isotonic(10, 8, 1.5, 2);
  RunOptions o;
  o.iters = 30;
  o.trace_stride = 1;
  const RunResult r = run(bp.problem, AdapTos{}, o);
  std::stringstream ss;
  write_trace_csv(ss, r.trace, {{"seed", 2}});
  const LoadedTrace back = read_trace_csv(ss);
  CHECK(back.header["seed"] == 2);
  REQUIRE(back.trace.records.size() == r.trace.records.size());
  for (std::size_t i = 0; i < r.trace.records.size(); ++i) {
    for (const auto& col : trace_columns()) {
      CHECK(trace_field(back.trace.records[i], col) == trace_field(r.trace.records[i], col));
    }
  }
  CHECK(trace_columns().front() == "t");
  CHECK_THROWS_AS(trace_field(r.trace.records[0], "nope"), std::invalid_argument);
  std::stringstream bad("t,gamma\n1,2\n");
  CHECK_THROWS(read_trace_csv(bad));
}

TEST_CASE("reference store and load") {
  ReferenceSolution ref;
  ref.fingerprint = "00000000000000aa";
  ref.x_star = Vector::LinSpaced(4, 0.0, 1.0);
  ref.f_star = 0.125;
  ref.method = "test";
  ref.accuracy = 1e-9;
  ref.u_star = Vector::Ones(4);
  const nlohmann::json j = ref;
  const ReferenceSolution back = j.get<ReferenceSolution>();
  CHECK(back.x_star == ref.x_star);
  CHECK(back.f_star == ref.f_star);
  CHECK(back.u_star.has_value());
  CHECK_FALSE(back.v_star.has_value());

  const std::string path = (std::filesystem::temp_directory_path() / "tos_refs_test.json").string();
  std::filesystem::remove(path);
  CHECK_FALSE(load_reference(path, ref.fingerprint).has_value());
  store_reference(path, ref);
  ReferenceSolution other = ref;
  other.fingerprint = "00000000000000bb";
  other.f_star = 3.0;
  store_reference(path, other);
  ref.f_star = 0.25;
  store_reference(path, ref);
  CHECK(load_reference(path, "00000000000000aa")->f_star == 0.25);
  CHECK(load_reference(path, "00000000000000bb")->f_star == 3.0);
  CHECK_FALSE(load_reference(path, "00000000000000cc").has_value());
}

TEST_CASE("rate estimation") {
  std::vector<double> t, a, b;
  for (int k = 1; k <= 5000; ++k) {
    t.push_back(k);
    a.push_back(5.0 / std::sqrt(double(k)));
    b.push_back(3.0 / k);
  }
  CHECK(estimate_rate(t, a) == doctest::Approx(-0.5).epsilon(0.02));
  CHECK(estimate_rate(t, b) == doctest::Approx(-1.0).epsilon(0.01));
  const std::vector<double> few_t(t.begin(), t.begin() + 40), few_v(a.begin(), a.begin() + 40);
  CHECK_THROWS(estimate_rate(few_t, few_v));
  CHECK(suboptimality(1.1, 1.0) == doctest::Approx(0.1));
  CHECK(suboptimality(1e-13, 0.0) == doctest::Approx(0.1));
}

TEST_CASE("reference from long runs on a half-line") {
  BuiltProblem bp;
  bp.spec.name = "halfline";
  Vector one(1), start(1);
  one << 1.0, start << 3.0;
  bp.problem = make_problem("halfline", std::make_shared<BoxIndicator>(1, 0.0, std::numeric_limits<double>::infinity()),
                            std::make_shared<ZeroTerm>(), std::make_shared<LinearOracle>(one), start);
  const ReferenceSolution ref = reference_solution(bp, 2000);
  CHECK(ref.f_star == 0.0);
  CHECK(ref.x_star(0) == 0.0);
  CHECK_FALSE(ref.low_confidence);
  CHECK_THROWS_AS(reference_solution(bp, 0), std::invalid_argument);
}

TEST_CASE("fixed point from a certificate") {
  ReferenceSolution ref;
  ref.x_star = Vector::Ones(2);
  CHECK_FALSE(fixed_point_from_reference(ref, 0.5).has_value());
  ref.v_star = Vector::Constant(2, 2.0);
  const auto y = fixed_point_from_reference(ref, 0.5);
  REQUIRE(y.has_value());
  CHECK((*y - Vector::Constant(2, 2.0)).norm() == 0.0);
}

TEST_CASE("run summary json round trip") {
  const BuiltProblem bp = make_isotonic(10, 8, 1.0, 1);
  RunOptions o;
  o.iters = 50;
  const AdapTos policy{1.0, 1.0, false};
  const RunResult r = run(bp.problem, policy, o);
  RunSummary s = summarize(bp, policy, r, 50);
  s.slopes["x"] = -0.5;
  s.warnings.push_back("w");
  CHECK(s.completed == 50);
  CHECK(s.policy == "adaptos");
  CHECK(s.fingerprint == fingerprint(bp.spec));
  const nlohmann::json j = s;
  CHECK(j.get<RunSummary>() == s);
}

TEST_CASE("bench smoke") {
  BenchOptions o;
  o.suite = "isotonic";
  o.p_values = {1.0, 2.0};
  o.iters = 100;
  o.out_dir = (std::filesystem::temp_directory_path() / "tos_bench_test").string();
  const BenchReport report = run_bench(o);
  REQUIRE(report.runs.size() == 2);
  for (const auto& s : report.runs) {
    CHECK_FALSE(s.error.has_value());
    CHECK(std::filesystem::exists(s.trace_path));
  }
  const nlohmann::json j = report;
  CHECK(j.get<BenchReport>().runs.size() == 2);
  o.suite = "nope";
  CHECK_THROWS_AS(run_bench(o), std::invalid_argument);
  CHECK_THROWS_AS(make_policy("nope", 1, 1, false, 1, 10), std::invalid_argument);
}

TEST_CASE("property checks") {
  for (const auto& c : run_checks("all", 3)) {
    INFO(c.suite << "/" << c.name << " = " << c.value);
    CHECK(c.passed);
  }
  bool any_failed = false;
  for (const auto& c : run_checks("prox", 3, true)) any_failed = any_failed || !c.passed;
  CHECK(any_failed);
  CHECK_THROWS_AS(run_checks("nope", 0), std::invalid_argument);
}
