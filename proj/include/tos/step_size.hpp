#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>

namespace tos {

/// gamma_t = gamma0 / sqrt(horizon + 1) at every t.
struct FixedHorizon {
  double gamma0 = 1.0;
  std::size_t horizon = 0;
};

/// gamma_t = gamma0 / sqrt(t + 1).
struct Diminishing {
  double gamma0 = 1.0;
};

/// gamma_t = gamma. With a declared smoothness constant the theory wants gamma in (0, 2/L).
struct Constant {
  double gamma = 1.0;
  std::optional<double> smoothness;
};

/// gamma_t = alpha / sqrt(beta + sum_{tau < t} ||u_tau||^2).
///
/// With drop_beta the first step is alpha and beta is left out afterwards
/// (falling back to alpha while the accumulated sum is still zero).
struct AdapTos {
  double alpha = 1.0;
  double beta = 1.0;
  bool drop_beta = false;
};

using StepSizePolicy = std::variant<FixedHorizon, Diminishing, Constant, AdapTos>;

std::string policy_name(const StepSizePolicy& policy);

/// Throws std::invalid_argument for non-positive parameters.
void validate(const StepSizePolicy& policy);

/// Step size for iteration t given sum_{tau < t} ||u_tau||^2 (ignored by
/// non-adaptive variants). Always positive.
double next_gamma(const StepSizePolicy& policy, std::size_t t, double prev_u_norm_sq_sum);

/// Warning text when a Constant step falls outside (0, 2/L); empty otherwise.
std::string step_warning(const StepSizePolicy& policy);

}  // namespace tos
