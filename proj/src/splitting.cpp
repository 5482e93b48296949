#include "tos/splitting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace tos {

double Problem::objective(const Vector& x) const { return f->value(x) + g->penalty(x) + h->penalty(x); }

double Problem::split_objective(const Vector& z, const Vector& x) const {
  return f->value(z) + g->penalty(z) + h->penalty(x);
}

Problem make_problem(std::string name, TermPtr g, TermPtr h, OraclePtr f, Vector y0) {
  if (!g || !h || !f) throw std::invalid_argument("problem '" + name + "': missing term or oracle");
  if (y0.size() < 1) throw std::invalid_argument("problem '" + name + "': dimension must be at least 1");
  if (f->dim() != y0.size()) {
    throw std::invalid_argument("problem '" + name + "': oracle dimension does not match starting point");
  }
  require_finite(y0, "starting point");
  return Problem{std::move(name), std::move(g), std::move(h), std::move(f), std::move(y0)};
}

SolverState init_state(const Vector& y0) {
  SolverState s;
  const Eigen::Index n = y0.size();
  s.y0 = y0;
  s.y = y0;
  s.z = Vector::Zero(n);
  s.x = Vector::Zero(n);
  s.u = Vector::Zero(n);
  s.x_avg = Vector::Zero(n);
  s.z_avg = Vector::Zero(n);
  s.x_wavg = Vector::Zero(n);
  s.z_wavg = Vector::Zero(n);
  s.sum_x_minus_z = Vector::Zero(n);
  return s;
}

SolverState tos_step(SolverState s, const ProxTerm& g, const ProxTerm& h, const Oracle& f, double gamma,
                     RandomStream* rng) {
  const std::size_t t = s.t;
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw StepError(t, "step size must be positive");
  try {
    s.z = g.prox(s.y, gamma);
    ++s.calls.prox_g;
    if (f.is_stochastic()) {
      if (rng == nullptr) throw std::invalid_argument("stochastic oracle needs a random stream");
      s.u = f.direction(s.z, *rng);
    } else {
      s.u = f.subgradient(s.z);
    }
    ++s.calls.oracle;
    s.x = h.prox(2.0 * s.z - s.y - gamma * s.u, gamma);
    ++s.calls.prox_h;
  } catch (const StepError&) {
    throw;
  } catch (const std::exception& e) {
    throw StepError(t, e.what());
  }

  s.y += s.x - s.z;
  s.sum_x_minus_z += s.x - s.z;

  const double k = static_cast<double>(t) + 1.0;
  s.x_avg += (s.x - s.x_avg) / k;
  s.z_avg += (s.z - s.z_avg) / k;
  s.gamma_sum += gamma;
  const double w = gamma / s.gamma_sum;
  s.x_wavg += w * (s.x - s.x_wavg);
  s.z_wavg += w * (s.z - s.z_wavg);

  const double u_sq = s.u.squaredNorm();
  s.cum_u_sq += u_sq;
  s.sum_gamma_u_sq += gamma * u_sq;
  s.sum_gamma2_u_sq += gamma * gamma * u_sq;
  s.max_u_norm = std::max(s.max_u_norm, std::sqrt(u_sq));
  s.last_gamma = gamma;
  s.t = t + 1;
  return s;
}

Vector tos_operator(const Vector& y, const Vector& u, double gamma, const ProxTerm& g, const ProxTerm& h) {
  if (!(gamma > 0.0)) throw std::invalid_argument("tos_operator: step size must be positive");
  const Vector z = g.prox(y, gamma);
  return y - z + h.prox(2.0 * z - y - gamma * u, gamma);
}

namespace {

TraceRecord make_record(const SolverState& s, const Problem& p, double elapsed_ms, const RunOptions& options) {
  TraceRecord r;
  r.t = s.t;
  r.elapsed_ms = elapsed_ms;
  r.gamma = s.last_gamma;
  r.f_last = p.objective(s.z);
  r.split_obj = p.split_objective(s.z, s.x);
  r.f_erg_uniform = p.objective(s.z_avg);
  r.f_erg_weighted = p.objective(s.z_wavg);
  r.infeas_last = (s.x - s.z).norm();
  r.infeas_erg = (s.x_avg - s.z_avg).norm();
  r.dist_h = p.h->distance(s.z_avg);
  r.cum_u_sq = s.cum_u_sq;
  r.split_obj_erg = p.split_objective(s.z_avg, s.x_avg);
  r.dist_y_ref = options.reference_y ? (s.y - *options.reference_y).norm() : 0.0;
  r.sum_gamma_u_sq = s.sum_gamma_u_sq;
  r.sum_gamma2_u_sq = s.sum_gamma2_u_sq;
  r.max_u_norm = s.max_u_norm;
  return r;
}

bool record_finite(const TraceRecord& r) {
  for (double v : {r.gamma, r.f_last, r.split_obj, r.f_erg_uniform, r.f_erg_weighted, r.infeas_last, r.infeas_erg,
                   r.dist_h, r.cum_u_sq}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

RunResult run(const Problem& problem, const StepSizePolicy& policy, const RunOptions& options) {
  if (options.iters < 1) throw std::invalid_argument("run: iters must be at least 1");
  validate(policy);
  if (options.reference_y && options.reference_y->size() != problem.dim()) {
    throw std::invalid_argument("run: reference point has the wrong dimension");
  }

  RunResult result;
  result.policy = policy_name(policy);
  result.seed = options.seed;
  if (auto w = step_warning(policy); !w.empty()) result.warnings.push_back(std::move(w));

  RandomStream rng(options.seed);
  SolverState state = init_state(problem.y0);
  const std::size_t stride = options.trace_stride > 0 ? options.trace_stride : std::max<std::size_t>(1, options.iters / 1000);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  for (std::size_t k = 0; k < options.iters; ++k) {
    try {
      const double gamma = next_gamma(policy, k, state.cum_u_sq);
      state = tos_step(std::move(state), *problem.g, *problem.h, *problem.f, gamma, &rng);
    } catch (const std::exception& e) {
      result.error = e.what();
      break;
    }
    if (!all_finite(state.y)) {
      result.error = "iteration " + std::to_string(k) + ": non-finite iterate";
      break;
    }
    result.max_telescoping_error = std::max(result.max_telescoping_error, state.telescoping_error());
    if (options.reference_y) {
      result.max_dist_y_ref = std::max(result.max_dist_y_ref, (state.y - *options.reference_y).norm());
    }
    if (options.observer) options.observer(state);
    if (state.t % stride == 0 || state.t == options.iters) {
      TraceRecord rec = make_record(state, problem, elapsed(), options);
      if (!record_finite(rec)) {
        result.error = "iteration " + std::to_string(k) + ": non-finite metric";
        break;
      }
      result.trace.records.push_back(rec);
    }
  }
  result.state = std::move(state);
  return result;
}

FixedPointWitness construct_fixed_point(const Problem& problem, const Vector& x_star, const Vector& u_star,
                                        const Vector& v_star, const Vector& w_star, double gamma) {
  const Eigen::Index n = problem.dim();
  if (x_star.size() != n || u_star.size() != n || v_star.size() != n || w_star.size() != n) {
    throw std::invalid_argument("construct_fixed_point: dimension mismatch");
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("construct_fixed_point: step size must be positive");
  const double balance = (u_star + v_star + w_star).norm();
  if (balance > 1e-10) {
    std::ostringstream os;
    os << "construct_fixed_point: subgradients do not sum to zero (residual " << balance << ")";
    throw std::invalid_argument(os.str());
  }
  FixedPointWitness w;
  w.x_star = x_star;
  w.u_star = u_star;
  w.v_star = v_star;
  w.w_star = w_star;
  w.gamma = gamma;
  w.y_star = x_star + gamma * v_star;
  w.residual = (tos_operator(w.y_star, u_star, gamma, *problem.g, *problem.h) - w.y_star).norm();
  return w;
}

double fixed_point_residual(const Vector& y, double gamma, const Problem& problem) {
  if (!(gamma > 0.0)) throw std::invalid_argument("fixed_point_residual: step size must be positive");
  const Vector z = problem.g->prox(y, gamma);
  const Vector u = problem.f->subgradient(z);
  return (y - z + problem.h->prox(2.0 * z - y - gamma * u, gamma) - y).norm();
}

std::string to_string(IterateChoice c) {
  switch (c) {
    case IterateChoice::last: return "last";
    case IterateChoice::uniform_average: return "uniform_average";
    case IterateChoice::weighted_average: return "weighted_average";
  }
  return "unknown";
}

BestIterate best_iterate(const SolverState& state, const Problem& problem) {
  const std::pair<IterateChoice, const Vector*> candidates[] = {
      {IterateChoice::last, &state.z},
      {IterateChoice::uniform_average, &state.z_avg},
      {IterateChoice::weighted_average, &state.z_wavg},
  };
  BestIterate best;
  bool have = false;
  for (const auto& [choice, point] : candidates) {
    const double obj = problem.objective(*point);
    const double dist = problem.h->distance(*point);
    const bool better = !have || obj < best.objective || (obj == best.objective && dist < best.distance);
    if (better) {
      best = {choice, *point, obj, dist};
      have = true;
    }
  }
  return best;
}

bool BoundReport::all_within() const {
  return std::all_of(entries.begin(), entries.end(), [](const BoundEntry& e) { return e.ratio <= 1.0; });
}

namespace {

double ratio_of(double observed, double bound) {
  if (bound > 0.0) return observed / bound;
  if (observed <= 0.0) return 0.0;
  return std::numeric_limits<double>::infinity();
}

void track(BoundEntry& e, double observed, double bound, std::size_t t) {
  const double r = ratio_of(observed, bound);
  if (e.worst_t == 0 || r > e.ratio) {
    e.ratio = r;
    e.observed = observed;
    e.bound = bound;
    e.worst_t = t;
  }
}

}  // namespace

BoundReport theoretical_bound_check(const RunResult& result, const FixedHorizon& policy,
                                    const BoundConstants& c) {
  BoundReport report;
  const auto& records = result.trace.records;
  if (records.empty()) {
    report.notices.push_back("empty trace, nothing to check");
    return report;
  }
  if (!c.d || !c.g_f) {
    report.notices.push_back("objective and constraint bounds skipped: D or G_f not supplied");
  }
  const double gamma0 = policy.gamma0;
  const double gamma = gamma0 / std::sqrt(static_cast<double>(policy.horizon) + 1.0);

  if (c.d && c.g_f) {
    const double d = *c.d;
    const double g = *c.g_f;
    if (c.phi_star) {
      BoundEntry e{"objective_gap"};
      for (const auto& r : records) {
        const double k = static_cast<double>(r.t);
        const double bound = d * d / (2.0 * gamma * k) + gamma * (g * g + c.sigma * c.sigma) / 2.0;
        track(e, r.split_obj_erg - *c.phi_star, bound, r.t);
      }
      report.entries.push_back(e);
    } else {
      report.notices.push_back("objective bound skipped: optimal value not supplied");
    }
    BoundEntry e{"ergodic_infeasibility"};
    for (const auto& r : records) {
      const double bound = 2.0 * (d + gamma0 * (g + c.sigma / 2.0)) / static_cast<double>(r.t);
      track(e, r.infeas_erg, bound, r.t);
    }
    report.entries.push_back(e);
  }

  if (c.y0_to_ystar && c.g_f) {
    BoundEntry e{"iterate_distance"};
    const double bound = *c.y0_to_ystar + 2.0 * gamma0 * *c.g_f;
    for (const auto& r : records) track(e, r.dist_y_ref, bound, r.t);
    // Every iterate, not just recorded ones.
    track(e, result.max_dist_y_ref, bound, records.back().t);
    report.entries.push_back(e);
  } else {
    report.notices.push_back("iterate bound skipped: ||y0 - y*|| or G_f not supplied");
  }
  return report;
}

AdaptiveSumBounds adaptive_sum_bounds(double alpha, double beta, double g, std::size_t t) {
  if (!(beta > 0.0)) throw std::invalid_argument("adaptive_sum_bounds: beta must be positive");
  const double td = static_cast<double>(t);
  const double g2 = g * g;
  return {alpha * (2.0 * g2 / std::sqrt(beta) + 3.0 * g + 3.0 * std::sqrt(beta + g2 * td)),
          alpha * alpha * (2.0 + 4.0 * g2 / beta + 2.0 * std::log1p(g2 * td / beta))};
}

BoundReport adaptive_bound_check(const RunResult& result, const AdapTos& policy) {
  BoundReport report;
  if (policy.drop_beta) {
    report.notices.push_back("summation bounds need beta > 0; skipped for the drop-beta variant");
    return report;
  }
  BoundEntry lin{"sum_gamma_u_sq"};
  BoundEntry quad{"sum_gamma2_u_sq"};
  for (const auto& r : result.trace.records) {
    // sums run over tau = 0..t-1, i.e. the bound's index is t - 1
    const auto b = adaptive_sum_bounds(policy.alpha, policy.beta, r.max_u_norm, r.t - 1);
    track(lin, r.sum_gamma_u_sq, b.linear, r.t);
    track(quad, r.sum_gamma2_u_sq, b.quadratic, r.t);
  }
  if (result.trace.records.empty()) report.notices.push_back("empty trace, nothing to check");
  report.entries.push_back(lin);
  report.entries.push_back(quad);
  return report;
}

}  // namespace tos
