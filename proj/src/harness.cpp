#include "tos/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tos/product_space.hpp"
#include "tos/prox.hpp"
#include "tos/random.hpp"
#include "tos/terms.hpp"

namespace tos {

using nlohmann::json;

// Traces ---------------------------------------------------------------------

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols{
      "t",           "elapsed_ms", "gamma",          "f_last",          "split_obj",  "f_erg_uniform",
      "f_erg_weighted", "infeas_last", "infeas_erg", "dist_H",          "cum_u_sq",   "split_obj_erg",
      "dist_y_ref",  "sum_gamma_u_sq", "sum_gamma2_u_sq", "max_u_norm"};
  return cols;
}

namespace {

double* field_ptr(TraceRecord& r, const std::string& c) {
  if (c == "elapsed_ms") return &r.elapsed_ms;
  if (c == "gamma") return &r.gamma;
  if (c == "f_last") return &r.f_last;
  if (c == "split_obj") return &r.split_obj;
  if (c == "f_erg_uniform") return &r.f_erg_uniform;
  if (c == "f_erg_weighted") return &r.f_erg_weighted;
  if (c == "infeas_last") return &r.infeas_last;
  if (c == "infeas_erg") return &r.infeas_erg;
  if (c == "dist_H") return &r.dist_h;
  if (c == "cum_u_sq") return &r.cum_u_sq;
  if (c == "split_obj_erg") return &r.split_obj_erg;
  if (c == "dist_y_ref") return &r.dist_y_ref;
  if (c == "sum_gamma_u_sq") return &r.sum_gamma_u_sq;
  if (c == "sum_gamma2_u_sq") return &r.sum_gamma2_u_sq;
  if (c == "max_u_norm") return &r.max_u_norm;
  return nullptr;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double trace_field(const TraceRecord& r, const std::string& column) {
  if (column == "t") return static_cast<double>(r.t);
  TraceRecord copy = r;
  const double* p = field_ptr(copy, column);
  if (p == nullptr) throw std::invalid_argument("unknown trace column '" + column + "'");
  return *p;
}

void write_trace_csv(std::ostream& out, const Trace& trace, const json& header) {
  out << "# " << header.dump() << "\n";
  const auto& cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : trace.records) {
    out << r.t;
    for (std::size_t i = 1; i < cols.size(); ++i) out << "," << format_double(trace_field(r, cols[i]));
    out << "\n";
  }
}

LoadedTrace read_trace_csv(std::istream& in) {
  LoadedTrace out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("#", 0) != 0) throw std::runtime_error("trace: missing header line");
  out.header = json::parse(line.substr(1));
  if (!std::getline(in, line)) throw std::runtime_error("trace: missing column line");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.empty() || cols.front() != "t") throw std::runtime_error("trace: first column must be t");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    TraceRecord r;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("trace: short row");
      if (i == 0) {
        r.t = static_cast<std::size_t>(std::stoull(cell));
      } else if (double* p = field_ptr(r, cols[i])) {
        *p = std::stod(cell);
      }
    }
    out.trace.records.push_back(r);
  }
  return out;
}

// Reference solutions ----------------------------------------------------------

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(json& j, const ReferenceSolution& r) {
  j = json{{"fingerprint", r.fingerprint}, {"x_star", vec_json(r.x_star)}, {"f_star", r.f_star},
           {"method", r.method},           {"accuracy", r.accuracy},        {"low_confidence", r.low_confidence}};
  if (r.u_star) j["u_star"] = vec_json(*r.u_star);
  if (r.v_star) j["v_star"] = vec_json(*r.v_star);
  if (r.w_star) j["w_star"] = vec_json(*r.w_star);
}

void from_json(const json& j, ReferenceSolution& r) {
  r.fingerprint = j.at("fingerprint").get<std::string>();
  r.x_star = json_vec(j.at("x_star"));
  r.f_star = j.at("f_star").get<double>();
  r.method = j.at("method").get<std::string>();
  r.accuracy = j.value("accuracy", 0.0);
  r.low_confidence = j.value("low_confidence", false);
  r.u_star = j.contains("u_star") ? std::optional(json_vec(j.at("u_star"))) : std::nullopt;
  r.v_star = j.contains("v_star") ? std::optional(json_vec(j.at("v_star"))) : std::nullopt;
  r.w_star = j.contains("w_star") ? std::optional(json_vec(j.at("w_star"))) : std::nullopt;
}

std::optional<ReferenceSolution> load_reference(const std::string& path, const std::string& fp) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  const json all = json::parse(in);
  if (!all.contains(fp)) return std::nullopt;
  ReferenceSolution r = all.at(fp).get<ReferenceSolution>();
  if (r.fingerprint != fp) throw std::runtime_error("references file: entry " + fp + " has a mismatched fingerprint");
  return r;
}

void store_reference(const std::string& path, const ReferenceSolution& ref) {
  json all = json::object();
  if (std::ifstream in(path); in) all = json::parse(in);
  all[ref.fingerprint] = ref;
  std::ofstream(path) << all.dump(1) << "\n";
}

std::optional<Vector> fixed_point_from_reference(const ReferenceSolution& ref, double gamma) {
  if (!ref.v_star) return std::nullopt;
  return Vector(ref.x_star + gamma * *ref.v_star);
}

BoundConstants measured_constants(const Problem& problem, const ReferenceSolution& ref, const Vector& y_star,
                                  const RunResult& result) {
  BoundConstants c;
  c.d = std::max((problem.y0 - ref.x_star).norm(), (problem.y0 - y_star).norm());
  c.g_f = result.state.max_u_norm;
  c.phi_star = ref.f_star;
  c.y0_to_ystar = (problem.y0 - y_star).norm();
  return c;
}

double suboptimality(double objective, double f_star) {
  return std::abs(objective - f_star) / std::max(std::abs(f_star), 1e-12);
}

namespace {

const DenseMap* dense_map(const BuiltProblem& bp) {
  return bp.loss ? dynamic_cast<const DenseMap*>(&bp.loss->map()) : nullptr;
}

// Isotonic least squares by enumerating which of the n - 1 order constraints are tight.
ReferenceSolution isotonic_enumeration(const BuiltProblem& bp) {
  const Matrix& a = dense_map(bp)->matrix();
  const Vector& b = bp.loss->data();
  const Eigen::Index n = a.cols();
  ReferenceSolution best;
  best.f_star = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    // coordinates i and i + 1 share a value when bit i is set
    std::vector<Eigen::Index> block_of(static_cast<std::size_t>(n));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i > 0 && !(mask & (1u << (i - 1)))) ++k;
      block_of[static_cast<std::size_t>(i)] = k;
    }
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, k + 1);
    for (Eigen::Index i = 0; i < n; ++i) p(i, block_of[static_cast<std::size_t>(i)]) = 1.0;
    const Eigen::MatrixXd ap = a * p;
    const Eigen::VectorXd c = ap.completeOrthogonalDecomposition().solve(b);
    const Vector x = p * c;
    bool feasible = true;
    for (Eigen::Index i = 0; i + 1 < n; ++i) feasible = feasible && x(i) <= x(i + 1) + 1e-12;
    if (!feasible) continue;
    const double f = bp.problem.f->value(x);
    if (f < best.f_star) {
      best.f_star = f;
      best.x_star = x;
    }
  }
  best.method = "active-set enumeration";
  best.accuracy = 1e-12;
  return best;
}

// Portfolio least squares by enumerating the zero pattern and whether the return constraint is tight.
ReferenceSolution portfolio_enumeration(const BuiltProblem& bp) {
  const Matrix& r = dense_map(bp)->matrix();
  const Vector& c = bp.loss->data();
  const Eigen::Index n = r.cols();
  const Vector a_av = r.colwise().mean().transpose();
  const double target = c(0);
  ReferenceSolution best;
  best.f_star = std::numeric_limits<double>::infinity();
  for (unsigned zeros = 0; zeros + 1 < (1u << n); ++zeros) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(zeros & (1u << i))) free.push_back(i);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    for (int tight = 0; tight < 2; ++tight) {
      const Eigen::Index ne = 1 + tight;
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + ne, nf + ne);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + ne);
      Eigen::MatrixXd rf(r.rows(), nf);
      for (Eigen::Index k = 0; k < nf; ++k) rf.col(k) = r.col(free[static_cast<std::size_t>(k)]);
      kkt.topLeftCorner(nf, nf) = rf.transpose() * rf;
      rhs.head(nf) = rf.transpose() * c;
      for (Eigen::Index k = 0; k < nf; ++k) {
        kkt(nf, k) = kkt(k, nf) = 1.0;
        if (tight) kkt(nf + 1, k) = kkt(k, nf + 1) = a_av(free[static_cast<std::size_t>(k)]);
      }
      rhs(nf) = 1.0;
      if (tight) rhs(nf + 1) = target;
      const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      Vector x = Vector::Zero(n);
      for (Eigen::Index k = 0; k < nf; ++k) x(free[static_cast<std::size_t>(k)]) = sol(k);
      if ((kkt * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
      if (x.minCoeff() < -1e-12 || a_av.dot(x) < target - 1e-12) continue;
      const double f = bp.problem.f->value(x);
      if (f < best.f_star) {
        best.f_star = f;
        best.x_star = x;
      }
    }
  }
  best.method = "active-set enumeration";
  best.accuracy = 1e-12;
  return best;
}

ReferenceSolution portfolio_grid(const BuiltProblem& bp, double step) {
  const Matrix& r = dense_map(bp)->matrix();
  const Vector a_av = r.colwise().mean().transpose();
  const double target = bp.loss->data()(0);
  const Eigen::Index n = r.cols();
  const auto steps = static_cast<long>(std::lround(1.0 / step));
  ReferenceSolution best;
  best.f_star = std::numeric_limits<double>::infinity();
  Vector x(n);
  auto consider = [&]() {
    if (a_av.dot(x) < target - 1e-12) return;
    const double f = bp.problem.f->value(x);
    if (f < best.f_star) {
      best.f_star = f;
      best.x_star = x;
    }
  };
  if (n == 1) {
    x(0) = 1.0;
    consider();
  } else if (n == 2) {
    for (long i = 0; i <= steps; ++i) {
      x << i * step, 1.0 - i * step;
      consider();
    }
  } else {
    for (long i = 0; i <= steps; ++i) {
      for (long j = 0; i + j <= steps; ++j) {
        x << i * step, j * step, 1.0 - (i + j) * step;
        consider();
      }
    }
  }
  best.method = "simplex grid";
  best.accuracy = step;
  return best;
}

}  // namespace

ReferenceSolution reference_solution(const BuiltProblem& bp, std::size_t budget) {
  ReferenceSolution ref;
  const Eigen::Index n = bp.problem.dim();
  const auto* dm = dense_map(bp);
  const std::string& name = bp.spec.name;
  if (dm && name == "isotonic" && bp.spec.p == 2.0 && n <= 6) {
    ref = isotonic_enumeration(bp);
  } else if (dm && name == "portfolio" && bp.loss->kind() == LossKind::least_squares && n <= 4) {
    ref = portfolio_enumeration(bp);
  } else if (dm && name == "portfolio" && bp.loss->kind() == LossKind::l1_residual && n <= 3) {
    ref = portfolio_grid(bp, 1e-3);
  } else {
    if (budget < 1) throw std::invalid_argument("reference_solution: budget must be positive");
    std::vector<StepSizePolicy> policies{Diminishing{1.0}, AdapTos{1.0, 1.0, false}};
    if (auto l = bp.problem.f->constants().smoothness; l && *l > 0.0) policies.push_back(Constant{1.0 / *l, *l});
    RunOptions o;
    o.iters = budget;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& pol : policies) {
      const RunResult r = run(bp.problem, pol, o);
      if (!r.ok()) continue;
      const BestIterate b = best_iterate(r.state, bp.problem);
      hi = std::max(hi, b.objective);
      if (b.objective < lo) {
        lo = b.objective;
        ref.x_star = b.point;
      }
    }
    if (!std::isfinite(lo)) throw std::runtime_error("reference_solution: every reference run failed");
    ref.f_star = lo;
    ref.method = "best of " + std::to_string(policies.size()) + " long runs";
    ref.accuracy = (hi - lo) / std::max(std::abs(lo), 1e-12);
    ref.low_confidence = ref.accuracy > 1e-2;
  }
  ref.fingerprint = fingerprint(bp.spec);
  return ref;
}

json export_instance(const BuiltProblem& bp) {
  const auto* dm = dense_map(bp);
  if (!dm) throw std::invalid_argument("export_instance: only problems with a dense data matrix can be exported");
  const Matrix& a = dm->matrix();
  json j;
  j["fingerprint"] = fingerprint(bp.spec);
  j["spec"] = bp.spec;
  j["loss"] = to_string(bp.loss->kind());
  j["p"] = bp.loss->options().p;
  j["rows"] = a.rows();
  j["cols"] = a.cols();
  j["A"] = std::vector<double>(a.data(), a.data() + a.size());
  j["b"] = vec_json(bp.loss->data());
  j["g"] = bp.problem.g->name();
  j["h"] = bp.problem.h->name();
  if (bp.spec.name == "portfolio") j["a_av"] = vec_json(a.colwise().mean().transpose());
  return j;
}

// Rates ----------------------------------------------------------------------

double estimate_rate(const std::vector<double>& t, const std::vector<double>& values, double window) {
  if (t.size() != values.size()) throw std::invalid_argument("estimate_rate: length mismatch");
  if (!(window > 0.0 && window <= 1.0)) throw std::invalid_argument("estimate_rate: window must lie in (0, 1]");
  const std::size_t n = t.size();
  const std::size_t start = n - static_cast<std::size_t>(std::floor(window * static_cast<double>(n)));
  std::vector<double> xs, ys;
  for (std::size_t i = start; i < n; ++i) {
    if (values[i] > 0.0 && t[i] > 0.0 && std::isfinite(values[i])) {
      xs.push_back(std::log(t[i]));
      ys.push_back(std::log(values[i]));
    }
  }
  if (xs.size() < 50) throw std::runtime_error("estimate_rate: fewer than 50 usable points in the window");
  // keep points at least span/200 apart in log t
  const double min_gap = (xs.back() - xs.front()) / 200.0;
  std::vector<double> sx, sy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (sx.empty() || xs[i] - sx.back() >= min_gap) {
      sx.push_back(xs[i]);
      sy.push_back(ys[i]);
    }
  }
  if (sx.size() < 50) throw std::runtime_error("estimate_rate: fewer than 50 points after subsampling");
  const double k = static_cast<double>(sx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < sx.size(); ++i) mx += sx[i], my += sy[i];
  mx /= k, my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    sxy += (sx[i] - mx) * (sy[i] - my);
    sxx += (sx[i] - mx) * (sx[i] - mx);
  }
  if (!(sxx > 0.0)) throw std::runtime_error("estimate_rate: degenerate window");
  return sxy / sxx;
}

double estimate_rate(const Trace& trace, const std::string& column, double window) {
  std::vector<double> t, v;
  for (const auto& r : trace.records) {
    t.push_back(static_cast<double>(r.t));
    v.push_back(trace_field(r, column));
  }
  return estimate_rate(t, v, window);
}

double estimate_suboptimality_rate(const Trace& trace, const std::string& column, double f_star, double window) {
  std::vector<double> t, v;
  for (const auto& r : trace.records) {
    t.push_back(static_cast<double>(r.t));
    v.push_back(suboptimality(trace_field(r, column), f_star));
  }
  return estimate_rate(t, v, window);
}

// Summaries ------------------------------------------------------------------

void to_json(json& j, const RunSummary& s) {
  j = json{{"spec", s.spec},
           {"fingerprint", s.fingerprint},
           {"policy", s.policy},
           {"policy_params", s.policy_params},
           {"seed", s.seed},
           {"iters", s.iters},
           {"completed", s.completed},
           {"f_best", s.f_best},
           {"best_choice", s.best_choice},
           {"infeas_last", s.infeas_last},
           {"infeas_erg", s.infeas_erg},
           {"dist_h", s.dist_h},
           {"wall_ms", s.wall_ms},
           {"warnings", s.warnings},
           {"slopes", s.slopes},
           {"bound_ratios", s.bound_ratios},
           {"trace_path", s.trace_path}};
  j["error"] = s.error ? json(*s.error) : json(nullptr);
  j["reference"] = s.reference ? json(*s.reference) : json(nullptr);
}

void from_json(const json& j, RunSummary& s) {
  s.spec = j.at("spec").get<ProblemSpec>();
  j.at("fingerprint").get_to(s.fingerprint);
  j.at("policy").get_to(s.policy);
  j.at("policy_params").get_to(s.policy_params);
  j.at("seed").get_to(s.seed);
  j.at("iters").get_to(s.iters);
  j.at("completed").get_to(s.completed);
  j.at("f_best").get_to(s.f_best);
  j.at("best_choice").get_to(s.best_choice);
  j.at("infeas_last").get_to(s.infeas_last);
  j.at("infeas_erg").get_to(s.infeas_erg);
  j.at("dist_h").get_to(s.dist_h);
  j.at("wall_ms").get_to(s.wall_ms);
  j.at("warnings").get_to(s.warnings);
  j.at("slopes").get_to(s.slopes);
  j.at("bound_ratios").get_to(s.bound_ratios);
  j.at("trace_path").get_to(s.trace_path);
  s.error = j.at("error").is_null() ? std::nullopt : std::optional(j.at("error").get<std::string>());
  s.reference = j.at("reference").is_null() ? std::nullopt : std::optional(j.at("reference").get<std::string>());
}

std::map<std::string, double> policy_params(const StepSizePolicy& policy) {
  if (const auto* p = std::get_if<FixedHorizon>(&policy)) {
    return {{"gamma0", p->gamma0}, {"horizon", static_cast<double>(p->horizon)}};
  }
  if (const auto* p = std::get_if<Diminishing>(&policy)) return {{"gamma0", p->gamma0}};
  if (const auto* p = std::get_if<Constant>(&policy)) {
    std::map<std::string, double> m{{"gamma", p->gamma}};
    if (p->smoothness) m["smoothness"] = *p->smoothness;
    return m;
  }
  const auto& a = std::get<AdapTos>(policy);
  return {{"alpha", a.alpha}, {"beta", a.beta}, {"drop_beta", a.drop_beta ? 1.0 : 0.0}};
}

RunSummary summarize(const BuiltProblem& bp, const StepSizePolicy& policy, const RunResult& result,
                     std::size_t iters) {
  RunSummary s;
  s.spec = bp.spec;
  s.fingerprint = fingerprint(bp.spec);
  s.policy = result.policy;
  s.policy_params = policy_params(policy);
  s.seed = result.seed;
  s.iters = iters;
  s.completed = result.state.t;
  s.warnings = result.warnings;
  s.error = result.error;
  if (result.state.t > 0) {
    const BestIterate b = best_iterate(result.state, bp.problem);
    s.f_best = b.objective;
    s.best_choice = to_string(b.choice);
  }
  if (!result.trace.records.empty()) {
    const auto& last = result.trace.records.back();
    s.infeas_last = last.infeas_last;
    s.infeas_erg = last.infeas_erg;
    s.dist_h = last.dist_h;
    s.wall_ms = last.elapsed_ms;
  }
  for (const char* col : {"infeas_erg", "infeas_last"}) {
    try {
      s.slopes[col] = estimate_rate(result.trace, col);
    } catch (const std::exception&) {
      // too few records for a slope
    }
  }
  return s;
}

void to_json(json& j, const BenchReport& r) { j = json{{"runs", r.runs}, {"median_slopes", r.median_slopes}}; }

void from_json(const json& j, BenchReport& r) {
  j.at("runs").get_to(r.runs);
  j.at("median_slopes").get_to(r.median_slopes);
}

// Bench ----------------------------------------------------------------------

StepSizePolicy make_policy(const std::string& name, double alpha, double beta, bool strict, double gamma0,
                           std::size_t iters) {
  StepSizePolicy p;
  if (name == "adaptos") {
    p = AdapTos{alpha, beta, !strict};
  } else if (name == "fixed-horizon") {
    p = FixedHorizon{gamma0, iters > 0 ? iters - 1 : 0};
  } else if (name == "diminishing") {
    p = Diminishing{gamma0};
  } else if (name == "constant") {
    p = Constant{gamma0, std::nullopt};
  } else {
    throw std::invalid_argument("unknown policy '" + name + "'");
  }
  validate(p);
  return p;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

std::string format_p(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

}  // namespace

BenchReport run_bench(const BenchOptions& o) {
  static const std::vector<std::string> suites{"isotonic", "portfolio", "grouplasso",
                                               "sparselowrank", "inpainting", "tvdeblur"};
  if (std::find(suites.begin(), suites.end(), o.suite) == suites.end()) {
    throw std::invalid_argument("unknown suite '" + o.suite + "'");
  }
  if (o.repeats < 1 || o.iters < 1) throw std::invalid_argument("bench: repeats and iters must be positive");
  for (const auto& name : o.policies) make_policy(name, o.alpha, o.beta, o.strict_adaptos, o.gamma0, o.iters);

  struct Cell {
    std::string label;
    ProblemSpec spec;
    std::string policy;
  };
  std::vector<Cell> cells;
  const std::vector<double> ps = o.suite == "isotonic" ? (o.p_values.empty() ? std::vector<double>{1.0} : o.p_values)
                                                       : std::vector<double>{0.0};
  for (double p : ps) {
    for (const auto& pol : o.policies) {
      for (std::size_t r = 0; r < o.repeats; ++r) {
        ProblemSpec spec = default_spec(o.suite);
        spec.seed = o.seed + r;
        std::string label = o.suite;
        if (o.suite == "isotonic") {
          spec.p = p;
          label += "_p" + format_p(p);
        }
        label += "_" + pol;
        cells.push_back({label, spec, pol});
      }
    }
  }

  std::filesystem::create_directories(o.out_dir);
  BenchReport report;
  report.runs.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      RunSummary& s = report.runs[i];
      s.spec = cell.spec;
      s.policy = cell.policy;
      s.seed = cell.spec.seed;
      s.iters = o.iters;
      try {
        const BuiltProblem bp = build(cell.spec);
        const StepSizePolicy policy = make_policy(cell.policy, o.alpha, o.beta, o.strict_adaptos, o.gamma0, o.iters);
        RunOptions ro;
        ro.iters = o.iters;
        ro.seed = cell.spec.seed;
        ro.trace_stride = o.trace_stride;
        const RunResult result = run(bp.problem, policy, ro);
        s = summarize(bp, policy, result, o.iters);
        s.trace_path = (std::filesystem::path(o.out_dir) / (cell.label + "_s" + std::to_string(cell.spec.seed) + ".csv")).string();
        json header{{"spec", bp.spec}, {"fingerprint", s.fingerprint}, {"policy", s.policy},
                    {"policy_params", s.policy_params}, {"seed", s.seed}, {"iters", o.iters}, {"version", kVersion}};
        if (o.references) {
          if (auto ref = load_reference(*o.references, s.fingerprint)) {
            s.reference = ref->fingerprint;
            header["reference"] = ref->fingerprint;
            for (const char* col : {"f_last", "f_erg_uniform", "f_erg_weighted"}) {
              try {
                s.slopes[std::string("sub_") + col] = estimate_suboptimality_rate(result.trace, col, ref->f_star);
              } catch (const std::exception&) {
                // not enough positive records
              }
            }
          }
        }
        std::ofstream out(s.trace_path);
        write_trace_csv(out, result.trace, header);
      } catch (const std::exception& e) {
        s.error = e.what();
      }
    }
  };
  const std::size_t nw = std::max<std::size_t>(1, std::min(o.workers, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::map<std::string, std::vector<double>> by_key;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (const auto& [k, v] : report.runs[i].slopes) by_key[cells[i].label + ":" + k].push_back(v);
  }
  for (const auto& [k, v] : by_key) report.median_slopes[k] = median(v);
  return report;
}

// Property checks --------------------------------------------------------------

namespace {

struct NamedTerm {
  std::string name;
  TermPtr term;
  Eigen::Index dim;
};

/// Adds a fixed offset to another term's prox; used to show the checks have teeth.
class ShiftedProx final : public ProxTerm {
 public:
  ShiftedProx(TermPtr inner, double shift) : inner_(std::move(inner)), shift_(shift) {}
  TermKind kind() const override { return inner_->kind(); }
  std::string name() const override { return inner_->name() + "+fault"; }
  double value(const Vector& x) const override { return inner_->value(x); }
  bool is_indicator() const override { return inner_->is_indicator(); }
  Vector prox(const Vector& x, double gamma) const override {
    return inner_->prox(x, gamma).array() + shift_;
  }

 private:
  TermPtr inner_;
  double shift_;
};

std::vector<NamedTerm> sample_terms(RandomStream& rng) {
  std::vector<NamedTerm> out;
  const Eigen::Index n = 6;
  out.push_back({"zero", std::make_shared<ZeroTerm>(), n});
  out.push_back({"l1", std::make_shared<L1Term>(0.5 + rng.uniform()), n});
  out.push_back({"group_l2",
                 std::make_shared<GroupL2Term>(std::vector<IndexBlock>{{0, 1, 2}, {4, 5}},
                                               std::vector<double>{std::sqrt(3.0), std::sqrt(2.0)}, 0.7),
                 n});
  out.push_back({"nuclear", std::make_shared<NuclearTerm>(3, 3, 0.8), 9});
  out.push_back({"box", std::make_shared<BoxIndicator>(n, -0.5, 1.0), n});
  out.push_back({"simplex", std::make_shared<SimplexIndicator>(), n});
  out.push_back({"halfspace", std::make_shared<HalfspaceIndicator>(draw_gaussian(rng, n), 0.3), n});
  out.push_back({"nuclear_ball", std::make_shared<NuclearBallIndicator>(3, 3, 1.5), 9});
  out.push_back({"pairwise_order", std::make_shared<PairwiseOrderIndicator>(PairwiseOrderIndicator::chain_pairs(n, 0)), n});
  out.push_back({"tv_rows", std::make_shared<TvTerm>(2, 3, 0.6, TvAxis::rows), n});
  out.push_back({"tv_cols", std::make_shared<TvTerm>(2, 3, 0.6, TvAxis::cols), n});
  out.push_back({"consensus", std::make_shared<ConsensusTerm>(2, 3), n});
  out.push_back({"block_concat",
                 std::make_shared<ConcatTerm>(2, std::vector<TermPtr>{std::make_shared<L1Term>(0.4),
                                                                      std::make_shared<BoxIndicator>(2, 0.0, 1.0)}),
                 n});
  return out;
}

void prox_suite(std::vector<CheckResult>& out, std::uint64_t seed, bool fault) {
  RandomStream rng(seed);
  auto terms = sample_terms(rng);
  if (fault) terms.front().term = std::make_shared<ShiftedProx>(terms.front().term, 0.1);
  constexpr int trials = 1000;
  for (const auto& nt : terms) {
    double fne = -std::numeric_limits<double>::infinity();
    double opt = -std::numeric_limits<double>::infinity();
    double idem = 0.0;
    for (int k = 0; k < trials; ++k) {
      const Vector x = 2.0 * draw_gaussian(rng, nt.dim);
      const Vector y = 2.0 * draw_gaussian(rng, nt.dim);
      const double gamma = 0.05 + 2.0 * rng.uniform();
      fne = std::max(fne, firm_nonexpansive_gap(*nt.term, x, y, gamma));
      std::vector<Vector> probes;
      for (int q = 0; q < 5; ++q) {
        const Vector p = 2.0 * draw_gaussian(rng, nt.dim);
        probes.push_back(nt.term->is_indicator() ? nt.term->prox(p, 1.0) : p);
      }
      opt = std::max(opt, prox_optimality_check(*nt.term, x, gamma, probes));
      if (nt.term->is_indicator()) {
        const Vector px = nt.term->prox(x, gamma);
        idem = std::max(idem, (nt.term->prox(px, gamma) - px).lpNorm<Eigen::Infinity>());
      }
    }
    out.push_back({"prox", nt.name + ".firm_nonexpansive", fne <= 1e-9, fne, 1e-9, ""});
    out.push_back({"prox", nt.name + ".optimality", opt <= 1e-9, opt, 1e-9, ""});
    if (nt.term->is_indicator()) out.push_back({"prox", nt.name + ".idempotent", idem <= 1e-12, idem, 1e-12, ""});
  }
}

// f(x) = x, g = indicator{x >= 0}, h = 0: x* = 0 with u* = 1, v* = -1, w* = 0.
Problem linear_halfline_problem() {
  Vector c(1);
  c << 1.0;
  return make_problem("halfline", std::make_shared<BoxIndicator>(Vector::Constant(1, 0.0), Vector::Constant(1, std::numeric_limits<double>::infinity())),
                      std::make_shared<ZeroTerm>(), std::make_shared<LinearOracle>(c), Vector::Constant(1, 3.0));
}

void fixed_point_suite(std::vector<CheckResult>& out, std::uint64_t seed) {
  const Problem p = linear_halfline_problem();
  const Vector one = Vector::Constant(1, 1.0);
  const auto w = construct_fixed_point(p, Vector::Zero(1), one, -one, Vector::Zero(1), 0.5);
  out.push_back({"fixed-point", "halfline.residual", w.residual <= 1e-10, w.residual, 1e-10, ""});

  RandomStream rng(seed);
  const Eigen::Index n = 5;
  auto box = std::make_shared<BoxIndicator>(n, -1.0, 1.0);
  const Problem q = make_problem("box-box", box, box, std::make_shared<ZeroOracle>(n), Vector::Zero(n));
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector x = proj_box(draw_gaussian(rng, n), -1.0, 1.0);
    const auto wq = construct_fixed_point(q, x, Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0.1 + rng.uniform());
    worst = std::max(worst, wq.residual);
  }
  out.push_back({"fixed-point", "shared-set.residual", worst <= 1e-10, worst, 1e-10, ""});

  // 1/2 sum_i d_i (x_i - c_i)^2 over [-1, 1]^5: x* = clamp(c), u* = d (x* - c), v* = -u*, w* = 0.
  worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = 0.5 + 2.0 * rng.uniform();
    const Vector c = 2.0 * draw_gaussian(rng, n);
    const Vector sd = d.cwiseSqrt();
    const Matrix a = sd.asDiagonal();
    auto loss = std::make_shared<FirstOrderOracle>(LossKind::least_squares, std::make_shared<DenseMap>(a),
                                                   Vector(sd.cwiseProduct(c)));
    const Problem qb = make_problem("quadratic-box", box, std::make_shared<ZeroTerm>(), loss, Vector::Zero(n));
    const Vector x = proj_box(c, -1.0, 1.0);
    const Vector u = d.cwiseProduct(x - c);
    const auto wq = construct_fixed_point(qb, x, u, -u, Vector::Zero(n), 0.1 + rng.uniform());
    worst = std::max(worst, wq.residual);
  }
  out.push_back({"fixed-point", "quadratic-box.residual", worst <= 1e-8, worst, 1e-8, ""});
}

void telescoping_suite(std::vector<CheckResult>& out, std::uint64_t seed) {
  const BuiltProblem bp = make_isotonic(20, 30, 1.0, seed);
  RunOptions o;
  o.iters = 2000;
  o.seed = seed;
  const RunResult r = run(bp.problem, AdapTos{1.0, 1.0, false}, o);
  out.push_back({"telescoping", "isotonic.telescoping", r.ok() && r.max_telescoping_error <= 1e-9,
                 r.max_telescoping_error, 1e-9, r.error.value_or("")});
  const auto& c = r.state.calls;
  const bool counted = c.oracle == o.iters && c.prox_g == o.iters && c.prox_h == o.iters;
  out.push_back({"telescoping", "isotonic.call_counts", counted, static_cast<double>(c.oracle), 0.0,
                 std::to_string(c.oracle) + "/" + std::to_string(c.prox_g) + "/" + std::to_string(c.prox_h)});
}

void bounds_suite(std::vector<CheckResult>& out) {
  const Problem p = linear_halfline_problem();
  const std::size_t iters = 1000;
  const FixedHorizon policy{1.0, iters - 1};
  const double gamma = policy.gamma0 / std::sqrt(static_cast<double>(iters));
  const Vector y_star = Vector::Constant(1, -gamma);  // x* + gamma v*
  RunOptions o;
  o.iters = iters;
  o.trace_stride = 1;
  o.reference_y = y_star;
  const RunResult r = run(p, policy, o);
  BoundConstants c;
  c.d = std::max(std::abs(p.y0(0)), std::abs(p.y0(0) - y_star(0)));
  c.g_f = 1.0;
  c.phi_star = 0.0;
  c.y0_to_ystar = std::abs(p.y0(0) - y_star(0));
  const BoundReport rep = theoretical_bound_check(r, policy, c);
  for (const auto& e : rep.entries) out.push_back({"bounds", "halfline." + e.name, e.ratio <= 1.0, e.ratio, 1.0, ""});

  const Problem zero = make_problem("trivial", std::make_shared<ZeroTerm>(), std::make_shared<ZeroTerm>(),
                                    std::make_shared<ZeroOracle>(3), Vector::Zero(3));
  RunOptions oz;
  oz.iters = 100;
  oz.reference_y = Vector::Zero(3);
  const RunResult rz = run(zero, FixedHorizon{1.0, 99}, oz);
  BoundConstants cz;
  cz.d = 0.0, cz.g_f = 0.0, cz.phi_star = 0.0, cz.y0_to_ystar = 0.0;
  double worst = 0.0;
  for (const auto& e : theoretical_bound_check(rz, FixedHorizon{1.0, 99}, cz).entries) worst = std::max(worst, e.ratio);
  out.push_back({"bounds", "trivial.ratios_zero", worst == 0.0, worst, 0.0, ""});
}

}  // namespace

std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed, bool inject_fault) {
  static const std::vector<std::string> known{"all", "prox", "fixed-point", "telescoping", "bounds"};
  if (std::find(known.begin(), known.end(), suite) == known.end()) {
    throw std::invalid_argument("unknown check suite '" + suite + "'");
  }
  std::vector<CheckResult> out;
  const bool all = suite == "all";
  if (all || suite == "prox") prox_suite(out, seed, inject_fault);
  if (all || suite == "fixed-point") fixed_point_suite(out, seed);
  if (all || suite == "telescoping") telescoping_suite(out, seed);
  if (all || suite == "bounds") bounds_suite(out);
  if (inject_fault && suite != "prox" && !all) {
    out.push_back({suite, "injected_fault", false, 1.0, 0.0, "fault injected by request"});
  }
  return out;
}

}  // namespace tos
