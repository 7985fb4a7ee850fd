#include "archbert/numerics/optim.hpp"

#include <cmath>

#include "archbert/error.hpp"

namespace archbert {

void adam_step(ParamStore& params, AdamState& state) {
  for (const auto& [name, p] : params.items()) {
    if (!p.grad.all_finite()) throw NumericError("adam_step: non-finite gradient for '" + name + "'");
    if (!p.grad.same_shape(p.value)) throw ShapeError("adam_step: gradient shape differs for '" + name + "'");
  }
  state.t += 1;
  const auto& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (auto& [name, p] : params.items()) {
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (!m.same_shape(p.value)) {
      m = Tensor(p.value.shape(), std::vector<double>(p.value.size(), 0.0));
      v = m;
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace archbert
