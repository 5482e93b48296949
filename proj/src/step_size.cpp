#include "tos/step_size.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tos {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

std::string policy_name(const StepSizePolicy& policy) {
  return std::visit(overloaded{[](const FixedHorizon&) { return std::string("fixed-horizon"); },
                               [](const Diminishing&) { return std::string("diminishing"); },
                               [](const Constant&) { return std::string("constant"); },
                               [](const AdapTos&) { return std::string("adaptos"); }},
                    policy);
}

void validate(const StepSizePolicy& policy) {
  std::visit(overloaded{[](const FixedHorizon& p) { require_positive(p.gamma0, "gamma0"); },
                        [](const Diminishing& p) { require_positive(p.gamma0, "gamma0"); },
                        [](const Constant& p) {
                          require_positive(p.gamma, "gamma");
                          if (p.smoothness) require_positive(*p.smoothness, "smoothness constant");
                        },
                        [](const AdapTos& p) {
                          require_positive(p.alpha, "alpha");
                          if (!p.drop_beta) require_positive(p.beta, "beta");
                        }},
             policy);
}

double next_gamma(const StepSizePolicy& policy, std::size_t t, double prev_u_norm_sq_sum) {
  if (prev_u_norm_sq_sum < 0.0) throw std::invalid_argument("next_gamma: negative accumulated norm");
  return std::visit(
      overloaded{[](const FixedHorizon& p) { return p.gamma0 / std::sqrt(static_cast<double>(p.horizon) + 1.0); },
                 [t](const Diminishing& p) { return p.gamma0 / std::sqrt(static_cast<double>(t) + 1.0); },
                 [](const Constant& p) { return p.gamma; },
                 [t, prev_u_norm_sq_sum](const AdapTos& p) {
                   if (p.drop_beta) {
                     if (t == 0 || prev_u_norm_sq_sum == 0.0) return p.alpha;
                     return p.alpha / std::sqrt(prev_u_norm_sq_sum);
                   }
                   return p.alpha / std::sqrt(p.beta + prev_u_norm_sq_sum);
                 }},
      policy);
}

std::string step_warning(const StepSizePolicy& policy) {
  if (const auto* c = std::get_if<Constant>(&policy); c && c->smoothness) {
    const double limit = 2.0 / *c->smoothness;
    if (!(c->gamma > 0.0 && c->gamma < limit)) {
      std::ostringstream os;
      os << "constant step " << c->gamma << " outside (0, 2/L) = (0, " << limit << ")";
      return os.str();
    }
  }
  return {};
}

}  // namespace tos
