#include "archbert/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace archbert {

std::map<std::string, Tensor> finite_diff(const std::function<double()>& f, ParamStore& params, double h) {
  std::map<std::string, Tensor> out;
  for (auto& [name, p] : params.items()) {
    Tensor g(p.value.shape(), std::vector<double>(p.value.size(), 0.0));
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double x = p.value[i];
      p.value[i] = x + h;
      const double fp = f();
      p.value[i] = x - h;
      const double fm = f();
      p.value[i] = x;
      g[i] = (fp - fm) / (2.0 * h);
    }
    out.emplace(name, std::move(g));
  }
  return out;
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckResult grad_check(const std::function<Var(Tape&)>& loss, ParamStore& params, double tol, double h) {
  params.zero_grad();
  double f0 = 0.0;
  {
    Tape tape;
    const auto l = loss(tape);
    f0 = l.item();
    tape.backward(l);
  }
  // Central differences carry round-off near eps * |f| / h, so smaller
  // gradients cannot be resolved to `tol` relative; floor at that level.
  const double noise = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0)) / h;
  const double floor = std::max(1e-7, noise / tol);
  const auto numeric = finite_diff(
      [&] {
        Tape tape;
        return loss(tape).item();
      },
      params, h);
  GradCheckResult res;
  for (const auto& [name, p] : params.items()) {
    const auto& n = numeric.at(name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double e = relative_error(p.grad[i], n[i], floor);
      ++res.checked;
      if (e > tol) ++res.failed;
      if (e > res.max_rel_error) {
        res.max_rel_error = e;
        res.worst_param = name;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace archbert
