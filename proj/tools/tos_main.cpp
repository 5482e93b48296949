// Command-line front end: solve, bench, check, ref.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tos/harness.hpp"
#include "tos/problems.hpp"

namespace {

using nlohmann::json;
using namespace tos;

constexpr int kOk = 0;
constexpr int kNumeric = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProblemFlags {
  std::string problem = "isotonic";
  std::optional<double> p;
  std::optional<std::string> loss;
  std::optional<double> lambda;
  std::optional<long> m, n;
  std::optional<std::string> dataset;
  std::optional<long> batch;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--problem", problem, "isotonic | portfolio | grouplasso | sparselowrank | inpainting | tvdeblur");
    app->add_option("--p", p, "loss exponent (isotonic)");
    app->add_option("--loss", loss, "loss kind");
    app->add_option("--lambda", lambda, "regularization / radius");
    app->add_option("--m", m, "rows, samples or days");
    app->add_option("--n", n, "columns, features or assets");
    app->add_option("--dataset", dataset, "CSV returns or PGM image; relative paths resolve against TOS_FIXTURE_DIR");
    app->add_option("--batch", batch, "minibatch size, 0 for full (sub)gradients");
    app->add_option("--seed", seed, "generator and sampling seed");
  }

  ProblemSpec spec() const {
    ProblemSpec s;
    try {
      s = default_spec(problem);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (p) s.p = *p;
    if (loss) s.loss = *loss;
    if (lambda) s.lambda = *lambda;
    if (m) s.m = *m;
    if (n) s.n = *n;
    if (batch) s.batch = *batch;
    if (dataset) {
      std::string path = *dataset;
      if (const char* dir = std::getenv("TOS_FIXTURE_DIR"); dir && !path.empty() && path[0] != '/') {
        path = std::string(dir) + "/" + path;
      }
      s.dataset = path;
    }
    s.seed = seed;
    return s;
  }
};

std::optional<std::string> default_references() {
  if (const char* dir = std::getenv("TOS_FIXTURE_DIR")) return std::string(dir) + "/references.json";
  return std::nullopt;
}

struct PolicyFlags {
  std::string policy = "adaptos";
  double alpha = 1.0;
  double beta = 1.0;
  bool strict = false;
  double gamma0 = 1.0;

  void add(CLI::App* app) {
    app->add_option("--policy", policy, "adaptos | fixed-horizon | diminishing | constant");
    app->add_option("--alpha", alpha);
    app->add_option("--beta", beta);
    app->add_flag("--strict", strict, "keep beta in the adaptive step (default drops it)");
    app->add_option("--gamma0", gamma0, "initial / constant step");
  }

  StepSizePolicy make(std::size_t iters) const {
    try {
      return make_policy(policy, alpha, beta, strict, gamma0, iters);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

int cmd_solve(const ProblemFlags& pf, const PolicyFlags& pol, std::size_t iters, std::size_t stride,
              const std::string& out_path, const std::string& format, std::optional<std::string> refs) {
  if (format != "csv" && format != "json") throw UsageError("--format must be csv or json");
  if (iters < 1) throw UsageError("--iters must be at least 1");
  const ProblemSpec spec = pf.spec();
  BuiltProblem bp = [&] {
    try {
      return build(spec);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  const StepSizePolicy policy = pol.make(iters);
  if (!refs) refs = default_references();

  std::optional<ReferenceSolution> ref;
  if (refs) ref = load_reference(*refs, fingerprint(bp.spec));

  RunOptions ro;
  ro.iters = iters;
  ro.seed = pf.seed;
  ro.trace_stride = stride;
  std::optional<Vector> y_star;
  const auto* fh = std::get_if<FixedHorizon>(&policy);
  if (ref && fh) {
    y_star = fixed_point_from_reference(*ref, fh->gamma0 / std::sqrt(static_cast<double>(fh->horizon) + 1.0));
    ro.reference_y = y_star;
  }
  const RunResult result = run(bp.problem, policy, ro);
  RunSummary summary = summarize(bp, policy, result, iters);
  if (ref) {
    summary.reference = ref->fingerprint;
    try {
      summary.slopes["sub_f_erg_weighted"] = estimate_suboptimality_rate(result.trace, "f_erg_weighted", ref->f_star);
    } catch (const std::exception&) {
    }
    if (fh && y_star) {
      const BoundReport rep = theoretical_bound_check(result, *fh, measured_constants(bp.problem, *ref, *y_star, result));
      for (const auto& e : rep.entries) summary.bound_ratios[e.name] = e.ratio;
    }
  }
  if (const auto* a = std::get_if<AdapTos>(&policy); a && !a->drop_beta) {
    for (const auto& e : adaptive_bound_check(result, *a).entries) summary.bound_ratios[e.name] = e.ratio;
  }

  json header{{"spec", bp.spec},     {"fingerprint", summary.fingerprint}, {"policy", summary.policy},
              {"policy_params", summary.policy_params}, {"seed", pf.seed}, {"iters", iters}, {"version", kVersion}};
  if (summary.reference) header["reference"] = *summary.reference;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return kNumeric;
    }
    summary.trace_path = out_path;
    if (format == "csv") {
      write_trace_csv(out, result.trace, header);
    } else {
      json records = json::array();
      for (const auto& r : result.trace.records) {
        json row;
        for (const auto& c : trace_columns()) row[c] = trace_field(r, c);
        records.push_back(row);
      }
      out << json{{"header", header}, {"records", records}, {"summary", summary}}.dump(1) << "\n";
    }
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "iters=" << summary.completed << " f_best=" << summary.f_best << " (" << summary.best_choice << ")"
            << " infeas=" << summary.infeas_last << " infeas_erg=" << summary.infeas_erg
            << " wall_ms=" << summary.wall_ms;
  for (const auto& [k, v] : summary.bound_ratios) std::cout << " ratio." << k << "=" << v;
  std::cout << "\n";
  if (result.error) {
    std::cerr << "error: " << *result.error << "\n";
    return kNumeric;
  }
  return kOk;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw UsageError("bad number '" + tok + "' in list");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-operator splitting solver and benchmark runner"};
  app.require_subcommand(1);

  ProblemFlags solve_pf;
  PolicyFlags solve_pol;
  std::size_t iters = 1000;
  std::size_t stride = 0;
  std::string out_path;
  std::string format = "csv";
  std::optional<std::string> refs;
  auto* solve = app.add_subcommand("solve", "run one configuration and write its trace");
  solve_pf.add(solve);
  solve_pol.add(solve);
  solve->add_option("--iters", iters);
  solve->add_option("--trace-stride", stride, "record every k iterations (0 = iters/1000)");
  solve->add_option("--out", out_path, "trace file");
  solve->add_option("--format", format, "csv | json");
  solve->add_option("--references", refs, "references file (default $TOS_FIXTURE_DIR/references.json)");

  BenchOptions bench_opts;
  PolicyFlags bench_pol;
  std::string p_list, policy_list = "adaptos";
  auto* bench = app.add_subcommand("bench", "run a suite grid and write traces plus summary.json");
  bench->add_option("--suite", bench_opts.suite)->required();
  bench->add_option("--p", p_list, "comma-separated exponents (isotonic)");
  bench->add_option("--policies", policy_list, "comma-separated policies");
  bench->add_option("--alpha", bench_opts.alpha);
  bench->add_option("--beta", bench_opts.beta);
  bench->add_flag("--strict", bench_opts.strict_adaptos);
  bench->add_option("--gamma0", bench_opts.gamma0);
  bench->add_option("--repeats", bench_opts.repeats);
  bench->add_option("--iters", bench_opts.iters);
  bench->add_option("--seed", bench_opts.seed);
  bench->add_option("--workers", bench_opts.workers);
  bench->add_option("--trace-stride", bench_opts.trace_stride);
  bench->add_option("--out", bench_opts.out_dir, "output directory");
  bench->add_option("--references", bench_opts.references);

  std::string check_suite = "all";
  std::uint64_t check_seed = 0;
  bool inject_fault = false;
  std::string check_format = "text";
  auto* check = app.add_subcommand("check", "run the property suites");
  check->add_option("--suite", check_suite, "all | prox | fixed-point | telescoping | bounds");
  check->add_option("--seed", check_seed);
  check->add_option("--format", check_format, "text | json");
  check->add_flag("--inject-fault", inject_fault, "corrupt a prox map (harness self-test)");

  ProblemFlags ref_pf;
  std::size_t budget = 100000;
  std::string export_path, store_path;
  auto* ref = app.add_subcommand("ref", "compute or export a reference solution");
  ref_pf.add(ref);
  ref->add_option("--budget", budget, "iterations per reference run");
  ref->add_option("--export", export_path, "write instance data for an external solver");
  ref->add_option("--store", store_path, "add the computed reference to this references file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) return cmd_solve(solve_pf, solve_pol, iters, stride, out_path, format, refs);
    if (*bench) {
      if (!p_list.empty()) bench_opts.p_values = parse_list(p_list);
      bench_opts.policies.clear();
      std::stringstream ss(policy_list);
      for (std::string tok; std::getline(ss, tok, ',');) bench_opts.policies.push_back(tok);
      if (!bench_opts.references) bench_opts.references = default_references();
      BenchReport report;
      try {
        report = run_bench(bench_opts);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      std::ofstream(bench_opts.out_dir + "/summary.json") << json(report).dump(1) << "\n";
      std::size_t failed = 0;
      for (const auto& r : report.runs) failed += r.error ? 1 : 0;
      std::cout << report.runs.size() << " runs, " << failed << " failed\n";
      for (const auto& [k, v] : report.median_slopes) std::cout << "median slope " << k << " = " << v << "\n";
      return failed ? kNumeric : kOk;
    }
    if (*check) {
      std::vector<CheckResult> results;
      try {
        results = run_checks(check_suite, check_seed, inject_fault);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      bool ok = true;
      json failures = json::array();
      for (const auto& r : results) {
        ok = ok && r.passed;
        if (!r.passed) failures.push_back({{"suite", r.suite}, {"name", r.name}, {"value", r.value}, {"tolerance", r.tolerance}});
        if (check_format == "text") {
          std::cout << (r.passed ? "PASS " : "FAIL ") << r.suite << "/" << r.name << " value=" << r.value
                    << " tol=" << r.tolerance << (r.detail.empty() ? "" : " " + r.detail) << "\n";
        }
      }
      if (check_format == "json") std::cout << json{{"passed", ok}, {"failures", failures}}.dump() << "\n";
      return ok ? kOk : kNumeric;
    }
    if (*ref) {
      const BuiltProblem bp = build(ref_pf.spec());
      if (!export_path.empty()) {
        std::ofstream(export_path) << export_instance(bp).dump() << "\n";
        std::cout << "exported " << fingerprint(bp.spec) << " to " << export_path << "\n";
        return kOk;
      }
      const ReferenceSolution r = reference_solution(bp, budget);
      if (!store_path.empty()) store_reference(store_path, r);
      std::cout << "fingerprint=" << r.fingerprint << " f_star=" << std::setprecision(17) << r.f_star
                << " method=\"" << r.method << "\" accuracy=" << r.accuracy
                << (r.low_confidence ? " LOW-CONFIDENCE" : "") << "\n";
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
