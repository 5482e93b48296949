#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tos/problems.hpp"
#include "tos/splitting.hpp"

namespace tos {

inline constexpr const char* kVersion = "0.4.0";

// Traces ---------------------------------------------------------------------

/// Column order of the trace CSV. Append-only.
const std::vector<std::string>& trace_columns();
double trace_field(const TraceRecord& r, const std::string& column);

/// One `#`-prefixed JSON header line, a column line, then one line per record.
void write_trace_csv(std::ostream& out, const Trace& trace, const nlohmann::json& header);

struct LoadedTrace {
  nlohmann::json header;
  Trace trace;
};
LoadedTrace read_trace_csv(std::istream& in);

// Reference solutions ----------------------------------------------------------

struct ReferenceSolution {
  std::string fingerprint;
  Vector x_star;
  double f_star = 0.0;
  std::string method;
  double accuracy = 0.0;  // relative
  bool low_confidence = false;
  // Optional optimality certificate: u* in df(x*), v* in dg(x*), w* in dh(x*).
  std::optional<Vector> u_star, v_star, w_star;
};

void to_json(nlohmann::json& j, const ReferenceSolution& r);
void from_json(const nlohmann::json& j, ReferenceSolution& r);

/// Reference stored under `fingerprint` in a JSON file of references, if any.
std::optional<ReferenceSolution> load_reference(const std::string& path, const std::string& fingerprint);
/// Adds or replaces one entry in the references file.
void store_reference(const std::string& path, const ReferenceSolution& ref);

/// Exact enumeration for tiny instances (isotonic least squares with n <= 6,
/// portfolio least squares with n <= 4, portfolio l1 with n <= 3 on a grid);
/// otherwise the best of three runs of `budget` iterations, flagged low
/// confidence when their relative spread exceeds 1e-2.
ReferenceSolution reference_solution(const BuiltProblem& bp, std::size_t budget);

/// Instance data for external high-precision solvers.
nlohmann::json export_instance(const BuiltProblem& bp);

/// y* = x* + gamma v* when the reference carries an optimality certificate.
std::optional<Vector> fixed_point_from_reference(const ReferenceSolution& ref, double gamma);

/// D, G_f (largest observed ||u_t||), f* and ||y0 - y*|| for theoretical_bound_check.
BoundConstants measured_constants(const Problem& problem, const ReferenceSolution& ref, const Vector& y_star,
                                  const RunResult& result);

/// |obj - f*| / max(|f*|, 1e-12)
double suboptimality(double objective, double f_star);

// Rates ----------------------------------------------------------------------

/// Least-squares slope of log(value) against log(t) over the trailing
/// `window` fraction of points, subsampled to roughly even spacing in log t.
/// Nonpositive values are dropped; fewer than 50 usable points is an error.
double estimate_rate(const std::vector<double>& t, const std::vector<double>& values, double window = 0.8);
double estimate_rate(const Trace& trace, const std::string& column, double window = 0.8);
/// Slope of the suboptimality of an objective column against f*.
double estimate_suboptimality_rate(const Trace& trace, const std::string& column, double f_star,
                                   double window = 0.8);

// Summaries ------------------------------------------------------------------

struct RunSummary {
  ProblemSpec spec;
  std::string fingerprint;
  std::string policy;
  std::map<std::string, double> policy_params;
  std::uint64_t seed = 0;
  std::size_t iters = 0;
  std::size_t completed = 0;
  double f_best = 0.0;
  std::string best_choice;
  double infeas_last = 0.0;
  double infeas_erg = 0.0;
  double dist_h = 0.0;
  double wall_ms = 0.0;
  std::vector<std::string> warnings;
  std::optional<std::string> error;
  std::optional<std::string> reference;  // fingerprint of the reference used for rates
  std::map<std::string, double> slopes;
  std::map<std::string, double> bound_ratios;
  std::string trace_path;

  bool operator==(const RunSummary&) const = default;
};

void to_json(nlohmann::json& j, const RunSummary& s);
void from_json(const nlohmann::json& j, RunSummary& s);

std::map<std::string, double> policy_params(const StepSizePolicy& policy);
RunSummary summarize(const BuiltProblem& bp, const StepSizePolicy& policy, const RunResult& result,
                     std::size_t iters);

// Bench ----------------------------------------------------------------------

struct BenchOptions {
  std::string suite = "isotonic";
  std::vector<double> p_values;  // isotonic only
  std::vector<std::string> policies{"adaptos"};
  double alpha = 1.0;
  double beta = 1.0;
  bool strict_adaptos = false;
  double gamma0 = 1.0;
  std::size_t repeats = 1;
  std::size_t iters = 1000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t trace_stride = 0;
  std::string out_dir = ".";
  std::optional<std::string> references;  // references file for suboptimality slopes
};

struct BenchReport {
  std::vector<RunSummary> runs;
  std::map<std::string, double> median_slopes;  // keyed by cell label
};

void to_json(nlohmann::json& j, const BenchReport& r);
void from_json(const nlohmann::json& j, BenchReport& r);

StepSizePolicy make_policy(const std::string& name, double alpha, double beta, bool strict, double gamma0,
                           std::size_t iters);
BenchReport run_bench(const BenchOptions& options);

// Property checks --------------------------------------------------------------

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Suites: prox, fixed-point, telescoping, bounds ("all" runs every suite).
/// inject_fault corrupts a prox map so the prox suite must fail.
std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed, bool inject_fault = false);

}  // namespace tos
