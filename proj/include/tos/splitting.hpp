#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tos/linalg.hpp"
#include "tos/oracle.hpp"
#include "tos/random.hpp"
#include "tos/step_size.hpp"
#include "tos/terms.hpp"

namespace tos {

/// min f(x) + g(x) + h(x) with a starting point for y.
struct Problem {
  std::string name;
  TermPtr g;
  TermPtr h;
  OraclePtr f;
  Vector y0;

  Eigen::Index dim() const { return y0.size(); }
  /// f + g + h, with indicator terms contributing zero (feasibility is reported separately).
  double objective(const Vector& x) const;
  /// f(z) + g(z) + h(x), the quantity bounded for the ergodic pair.
  double split_objective(const Vector& z, const Vector& x) const;
};

/// Builds a Problem, rejecting missing pieces, empty or mismatched dimensions.
Problem make_problem(std::string name, TermPtr g, TermPtr h, OraclePtr f, Vector y0);

struct CallCounters {
  std::uint64_t oracle = 0;
  std::uint64_t prox_g = 0;
  std::uint64_t prox_h = 0;
};

/// Iterates of the splitting loop plus both ergodic averages.
struct SolverState {
  std::size_t t = 0;  // completed iterations
  Vector y0;
  Vector y, z, x, u;
  Vector x_avg, z_avg;    // uniform averages
  Vector x_wavg, z_wavg;  // step-weighted averages
  double gamma_sum = 0.0;
  double last_gamma = 0.0;
  double cum_u_sq = 0.0;         // sum ||u_tau||^2
  double sum_gamma_u_sq = 0.0;   // sum gamma_tau ||u_tau||^2
  double sum_gamma2_u_sq = 0.0;  // sum gamma_tau^2 ||u_tau||^2
  double max_u_norm = 0.0;
  Vector sum_x_minus_z;  // equals y - y0 in exact arithmetic
  CallCounters calls;

  double telescoping_error() const { return (sum_x_minus_z - (y - y0)).norm(); }
};

SolverState init_state(const Vector& y0);

/// Raised by tos_step when a prox or oracle call fails; carries the iteration index.
class StepError : public std::runtime_error {
 public:
  StepError(std::size_t iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

/// One iteration: z = prox_{gamma g}(y), u from the oracle at z,
/// x = prox_{gamma h}(2z - y - gamma u), y <- y - z + x. Exactly one call
/// each to prox_g, the oracle and prox_h. rng is used only by stochastic oracles.
SolverState tos_step(SolverState state, const ProxTerm& g, const ProxTerm& h, const Oracle& f, double gamma,
                     RandomStream* rng = nullptr);

/// y - prox_{gamma g}(y) + prox_{gamma h}(2 prox_{gamma g}(y) - y - gamma u)
Vector tos_operator(const Vector& y, const Vector& u, double gamma, const ProxTerm& g, const ProxTerm& h);

struct TraceRecord {
  std::size_t t = 0;
  double elapsed_ms = 0.0;
  double gamma = 0.0;
  double f_last = 0.0;          // objective at z_t
  double split_obj = 0.0;       // f(z_t) + g(z_t) + h(x_t)
  double f_erg_uniform = 0.0;   // objective at uniform average of z
  double f_erg_weighted = 0.0;  // objective at weighted average of z
  double infeas_last = 0.0;     // ||x_t - z_t||
  double infeas_erg = 0.0;      // ||xbar_t - zbar_t||
  double dist_h = 0.0;          // dist(zbar_t, H) when h is an indicator
  double cum_u_sq = 0.0;
  // Appended columns.
  double split_obj_erg = 0.0;  // f(zbar) + g(zbar) + h(xbar)
  double dist_y_ref = 0.0;     // ||y_t - y_ref|| when a reference point is supplied
  double sum_gamma_u_sq = 0.0;
  double sum_gamma2_u_sq = 0.0;
  double max_u_norm = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
};

struct RunOptions {
  std::size_t iters = 1000;
  std::uint64_t seed = 0;
  /// Record every `trace_stride` iterations; 0 picks max(1, iters / 1000). The last iteration is always recorded.
  std::size_t trace_stride = 0;
  /// Optional point y_ref; the run tracks max_t ||y_t - y_ref||.
  std::optional<Vector> reference_y;
  /// Called after every iteration.
  std::function<void(const SolverState&)> observer;
};

struct RunResult {
  Trace trace;
  SolverState state;
  std::vector<std::string> warnings;
  std::optional<std::string> error;  // set when the run aborted; trace holds the records so far
  double max_telescoping_error = 0.0;
  double max_dist_y_ref = 0.0;
  std::string policy;
  std::uint64_t seed = 0;

  bool ok() const { return !error.has_value(); }
};

/// Runs options.iters iterations. Deterministic given (problem, policy, iters, seed).
RunResult run(const Problem& problem, const StepSizePolicy& policy, const RunOptions& options);

// Diagnostics ----------------------------------------------------------------

struct FixedPointWitness {
  Vector y_star;
  Vector x_star;
  Vector u_star, v_star, w_star;
  double gamma = 0.0;
  double residual = 0.0;  // ||TOS(y*, u*) - y*||
};

/// y* = x* + gamma v*, given u* in df(x*), v* in dg(x*), w* in dh(x*) with u* + v* + w* = 0.
FixedPointWitness construct_fixed_point(const Problem& problem, const Vector& x_star, const Vector& u_star,
                                        const Vector& v_star, const Vector& w_star, double gamma);

/// ||TOS(y, u) - y|| with u the oracle's deterministic subgradient at prox_{gamma g}(y).
double fixed_point_residual(const Vector& y, double gamma, const Problem& problem);

enum class IterateChoice { last, uniform_average, weighted_average };

struct BestIterate {
  IterateChoice choice = IterateChoice::last;
  Vector point;
  double objective = 0.0;
  double distance = 0.0;
};

std::string to_string(IterateChoice c);

/// Lowest objective among the last z and the two averaged z; ties go to the
/// smaller distance from H.
BestIterate best_iterate(const SolverState& state, const Problem& problem);

struct BoundConstants {
  std::optional<double> d;           // max(||y0 - x*||, ||y0 - y*||)
  std::optional<double> g_f;         // subgradient bound
  double sigma = 0.0;                // oracle standard deviation bound
  std::optional<double> phi_star;    // optimal value
  std::optional<double> y0_to_ystar; // ||y0 - y*||
};

struct BoundEntry {
  std::string name;
  double observed = 0.0;  // at the worst record
  double bound = 0.0;
  double ratio = 0.0;     // max over records of observed / bound
  std::size_t worst_t = 0;
};

struct BoundReport {
  std::vector<BoundEntry> entries;
  std::vector<std::string> notices;
  bool all_within() const;
};

/// Evaluates the fixed-horizon guarantees at every recorded iteration:
///   split objective gap <= D^2 / (2 gamma k) + gamma (G^2 + sigma^2) / 2
///   ||xbar - zbar||     <= 2 (D + gamma0 (G + sigma / 2)) / k
///   ||y_t - y*||        <= ||y0 - y*|| + 2 gamma0 G
/// with gamma = gamma0 / sqrt(T + 1) and k completed iterations; at k = T + 1 these
/// are the horizon bounds. Constants that are missing skip their bound with a notice.
BoundReport theoretical_bound_check(const RunResult& result, const FixedHorizon& policy,
                                    const BoundConstants& constants);

/// Closed-form caps for sum_{tau <= t} gamma ||u||^2 and sum gamma^2 ||u||^2 under AdapTos with
/// ||u_tau|| <= g.
struct AdaptiveSumBounds {
  double linear;
  double quadratic;
};
AdaptiveSumBounds adaptive_sum_bounds(double alpha, double beta, double g, std::size_t t);

/// Checks the recorded AdapTos sums against adaptive_sum_bounds at every record.
BoundReport adaptive_bound_check(const RunResult& result, const AdapTos& policy);

}  // namespace tos
