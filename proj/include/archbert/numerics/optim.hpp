#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "archbert/numerics/autodiff.hpp"

namespace archbert {

struct AdamConfig {
  double lr = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::uint64_t t = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

/// Bias-corrected Adam update from the gradients stored in `params`.
/// Throws NumericError on a non-finite gradient, before touching anything.
void adam_step(ParamStore& params, AdamState& state);

}  // namespace archbert
