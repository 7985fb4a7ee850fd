#pragma once

#include <functional>
#include <map>
#include <string>

#include "archbert/numerics/autodiff.hpp"

namespace archbert {

/// Central differences of `f` with respect to every scalar of `params`.
std::map<std::string, Tensor> finite_diff(const std::function<double()>& f, ParamStore& params, double h = 1e-5);

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
/// gradient is zero from dividing round-off by round-off.
double relative_error(double analytic, double numeric, double floor = 1e-7);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t failed = 0;
};

/// Runs `loss` on a fresh tape, backpropagates and compares against
/// finite differences of the same function. The relative-error floor is
/// the round-off level of the differences, 4 eps max(1, |f|) / (h tol).
GradCheckResult grad_check(const std::function<Var(Tape&)>& loss, ParamStore& params, double tol = 1e-4,
                           double h = 1e-5);

}  // namespace archbert
