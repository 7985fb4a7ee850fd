#include "archbert/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "archbert/error.hpp"

namespace archbert {

Parameter& ParamStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw DataError("duplicate parameter '" + name + "'");
  Tensor grad(value.shape(), std::vector<double>(value.size(), 0.0));
  auto& p = params_[name];
  p.value = std::move(value);
  p.grad = std::move(grad);
  return p;
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [k, _] : params_) out.push_back(k);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) p.grad.fill(0.0);
}

const Tensor& Var::value() const { return tape->value(id); }

double Var::item() const {
  const auto& v = value();
  if (v.size() != 1) throw ShapeError("Var::item: value is not a scalar");
  return v[0];
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite input");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {this, it->second};
  if (!p.value.all_finite()) throw NumericError("parameter holds a non-finite value");
  Node n;
  n.value = p.value;
  if (track_grad_) {
    n.requires_grad = true;
    n.param = &p;
  }
  nodes_.push_back(std::move(n));
  param_nodes_[&p] = nodes_.size() - 1;
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, Backward backward, const char* op) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite result");
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].requires_grad; });
  if (n.requires_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) {
    n.grad = Tensor(n.value.shape(), std::vector<double>(n.value.size(), 0.0));
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ShapeError("backward: variable belongs to another tape");
  if (nodes_[loss.id].value.size() != 1) throw ShapeError("backward: objective is not a scalar");
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)[0] = 1.0;
  for (std::size_t k = loss.id + 1; k-- > 0;) {
    auto& n = nodes_[k];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (!n.grad.all_finite()) throw NumericError("backward: non-finite gradient");
    if (n.backward) n.backward(*this, k);
    if (n.param) {
      auto& g = n.param->grad;
      if (!g.same_shape(n.value)) g = Tensor(n.value.shape(), std::vector<double>(n.value.size(), 0.0));
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  }
}

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": operand is not rank 2");
}

// True when b broadcasts over the rows of a.
bool row_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  require_rank2(a, op);
  require_rank2(b, op);
  if (a.same_shape(b)) return false;
  if (b.rows() == 1 && b.cols() == a.cols()) return true;
  throw ShapeError(std::string(op) + ": shape mismatch");
}

template <typename F>
Var unary(Var a, const char* op, F&& f, std::function<double(double, double)> df) {
  const auto& x = a.value();
  Tensor y(x.shape(), std::vector<double>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const auto ia = a.id;
  return a.tape->record(std::move(y), {ia},
                        [ia, df](Tape& t, std::size_t self) {
                          if (!t.requires_grad(ia)) return;
                          const auto& x = t.value(ia);
                          const auto& y = t.value(self);
                          const auto& g = t.grad(self);
                          auto& gx = t.grad(ia);
                          for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[i] * df(x[i], y[i]);
                        },
                        op);
}

}  // namespace

Var matmul(Var a, Var b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require_rank2(A, "matmul");
  require_rank2(B, "matmul");
  if (A.cols() != B.rows()) throw ShapeError("matmul: inner dimensions differ");
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor C(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) C(i, j) += aip * B(p, j);
    }
  }
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {ia, ib},
                        [ia, ib](Tape& t, std::size_t self) {
                          const auto& A = t.value(ia);
                          const auto& B = t.value(ib);
                          const auto& G = t.grad(self);
                          const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
                          if (t.requires_grad(ia)) {
                            auto& GA = t.grad(ia);
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t p = 0; p < k; ++p) {
                                double s = 0.0;
                                for (std::size_t j = 0; j < m; ++j) s += G(i, j) * B(p, j);
                                GA(i, p) += s;
                              }
                          }
                          if (t.requires_grad(ib)) {
                            auto& GB = t.grad(ib);
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t p = 0; p < k; ++p) {
                                const double aip = A(i, p);
                                if (aip == 0.0) continue;
                                for (std::size_t j = 0; j < m; ++j) GB(p, j) += aip * G(i, j);
                              }
                          }
                        },
                        "matmul");
}

Var transpose(Var a) {
  const auto& A = a.value();
  require_rank2(A, "transpose");
  Tensor T(A.cols(), A.rows());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) T(j, i) = A(i, j);
  const auto ia = a.id;
  return a.tape->record(std::move(T), {ia},
                        [ia](Tape& t, std::size_t self) {
                          const auto& G = t.grad(self);
                          auto& GA = t.grad(ia);
                          for (std::size_t i = 0; i < GA.rows(); ++i)
                            for (std::size_t j = 0; j < GA.cols(); ++j) GA(i, j) += G(j, i);
                        },
                        "transpose");
}

namespace {

Var add_like(Var a, Var b, double sign, const char* op) {
  const auto& A = a.value();
  const auto& B = b.value();
  const bool bc = row_broadcast(A, B, op);
  Tensor C = A;
  const std::size_t c = A.cols();
  for (std::size_t i = 0; i < C.size(); ++i) C[i] += sign * (bc ? B[i % c] : B[i]);
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {ia, ib},
                        [ia, ib, bc, sign, c](Tape& t, std::size_t self) {
                          const auto& G = t.grad(self);
                          if (t.requires_grad(ia)) {
                            auto& GA = t.grad(ia);
                            for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i];
                          }
                          if (t.requires_grad(ib)) {
                            auto& GB = t.grad(ib);
                            for (std::size_t i = 0; i < G.size(); ++i) GB[bc ? i % c : i] += sign * G[i];
                          }
                        },
                        op);
}

}  // namespace

Var add(Var a, Var b) { return add_like(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_like(a, b, -1.0, "sub"); }

Var mul(Var a, Var b) {
  const auto& A = a.value();
  const auto& B = b.value();
  const bool bc = row_broadcast(A, B, "mul");
  const std::size_t c = A.cols();
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= bc ? B[i % c] : B[i];
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {ia, ib},
                        [ia, ib, bc, c](Tape& t, std::size_t self) {
                          const auto& A = t.value(ia);
                          const auto& B = t.value(ib);
                          const auto& G = t.grad(self);
                          if (t.requires_grad(ia)) {
                            auto& GA = t.grad(ia);
                            for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i] * (bc ? B[i % c] : B[i]);
                          }
                          if (t.requires_grad(ib)) {
                            auto& GB = t.grad(ib);
                            for (std::size_t i = 0; i < G.size(); ++i) GB[bc ? i % c : i] += G[i] * A[i];
                          }
                        },
                        "mul");
}

Var scale(Var a, double s) {
  return unary(a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, "add_scalar", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var square(Var a) {
  return unary(a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, "leaky_relu", [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var sigmoid(Var a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var gelu(Var a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double k = 0.044715;
  return unary(
      a, "gelu", [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); },
      [](double x, double) {
        const double th = std::tanh(c * (x + k * x * x * x));
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * c * (1.0 + 3.0 * k * x * x);
      });
}

Var sum_all(Var a) {
  const auto& A = a.value();
  double s = 0.0;
  for (double x : A.data()) s += x;
  const auto ia = a.id;
  return a.tape->record(Tensor(1, 1, s), {ia},
                        [ia](Tape& t, std::size_t self) {
                          const double g = t.grad(self)[0];
                          auto& GA = t.grad(ia);
                          for (std::size_t i = 0; i < GA.size(); ++i) GA[i] += g;
                        },
                        "sum_all");
}

Var mean_all(Var a) {
  const auto n = a.value().size();
  if (n == 0) throw ShapeError("mean_all: empty operand");
  return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

Var mean_axis(Var a, int axis) {
  const auto& A = a.value();
  require_rank2(A, "mean_axis");
  if (axis != 0 && axis != 1) throw ShapeError("mean_axis: axis must be 0 or 1");
  const std::size_t r = A.rows(), c = A.cols();
  if ((axis == 0 ? r : c) == 0) throw ShapeError("mean_axis: empty axis");
  Tensor M = axis == 0 ? Tensor(1, c) : Tensor(r, 1);
  const double inv = 1.0 / static_cast<double>(axis == 0 ? r : c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) (axis == 0 ? M(0, j) : M(i, 0)) += A(i, j) * inv;
  const auto ia = a.id;
  return a.tape->record(std::move(M), {ia},
                        [ia, axis, inv](Tape& t, std::size_t self) {
                          const auto& G = t.grad(self);
                          auto& GA = t.grad(ia);
                          for (std::size_t i = 0; i < GA.rows(); ++i)
                            for (std::size_t j = 0; j < GA.cols(); ++j)
                              GA(i, j) += inv * (axis == 0 ? G(0, j) : G(i, 0));
                        },
                        "mean_axis");
}

Var masked_mean_rows(Var a, const std::vector<bool>& keep) {
  const auto& A = a.value();
  require_rank2(A, "masked_mean_rows");
  if (keep.size() != A.rows()) throw ShapeError("masked_mean_rows: mask length differs from row count");
  const auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
  if (kept == 0) throw DataError("masked_mean_rows: every row is padding");
  const double inv = 1.0 / static_cast<double>(kept);
  Tensor M(1, A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    if (!keep[i]) continue;
    for (std::size_t j = 0; j < A.cols(); ++j) M(0, j) += A(i, j);
  }
  for (auto& x : M.data()) x *= inv;
  const auto ia = a.id;
  return a.tape->record(std::move(M), {ia},
                        [ia, keep, inv](Tape& t, std::size_t self) {
                          const auto& G = t.grad(self);
                          auto& GA = t.grad(ia);
                          for (std::size_t i = 0; i < GA.rows(); ++i) {
                            if (!keep[i]) continue;
                            for (std::size_t j = 0; j < GA.cols(); ++j) GA(i, j) += inv * G(0, j);
                          }
                        },
                        "masked_mean_rows");
}

Var masked_softmax(Var a, const std::vector<std::uint8_t>& mask) {
  const auto& A = a.value();
  require_rank2(A, "masked_softmax");
  const std::size_t r = A.rows(), c = A.cols();
  if (!mask.empty() && mask.size() != r * c) throw ShapeError("masked_softmax: mask size differs from operand");
  auto on = [&](std::size_t i, std::size_t j) { return mask.empty() || mask[i * c + j]; };
  Tensor P(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < c; ++j)
      if (on(i, j)) mx = std::max(mx, A(i, j));
    if (mx == -INFINITY) throw ShapeError("masked_softmax: row " + std::to_string(i) + " is fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (!on(i, j)) continue;
      P(i, j) = std::exp(A(i, j) - mx);
      z += P(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) P(i, j) /= z;
  }
  const auto ia = a.id;
  return a.tape->record(std::move(P), {ia},
                        [ia](Tape& t, std::size_t self) {
                          const auto& P = t.value(self);
                          const auto& G = t.grad(self);
                          auto& GA = t.grad(ia);
                          for (std::size_t i = 0; i < P.rows(); ++i) {
                            double dot = 0.0;
                            for (std::size_t j = 0; j < P.cols(); ++j) dot += G(i, j) * P(i, j);
                            for (std::size_t j = 0; j < P.cols(); ++j) GA(i, j) += P(i, j) * (G(i, j) - dot);
                          }
                        },
                        "masked_softmax");
}

Var log_softmax(Var a) {
  const auto& A = a.value();
  require_rank2(A, "log_softmax");
  Tensor Y(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < A.cols(); ++j) mx = std::max(mx, A(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) z += std::exp(A(i, j) - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < A.cols(); ++j) Y(i, j) = A(i, j) - lz;
  }
  const auto ia = a.id;
  return a.tape->record(std::move(Y), {ia},
                        [ia](Tape& t, std::size_t self) {
                          const auto& Y = t.value(self);
                          const auto& G = t.grad(self);
                          auto& GA = t.grad(ia);
                          for (std::size_t i = 0; i < Y.rows(); ++i) {
                            double gs = 0.0;
                            for (std::size_t j = 0; j < Y.cols(); ++j) gs += G(i, j);
                            for (std::size_t j = 0; j < Y.cols(); ++j) GA(i, j) += G(i, j) - std::exp(Y(i, j)) * gs;
                          }
                        },
                        "log_softmax");
}

Var layer_norm(Var a, Var gamma, Var beta, double eps) {
  const auto& X = a.value();
  require_rank2(X, "layer_norm");
  const std::size_t r = X.rows(), c = X.cols();
  if (gamma.value().shape() != std::vector<std::size_t>{1, c} || beta.value().shape() != gamma.value().shape()) {
    throw ShapeError("layer_norm: affine parameters must be 1 x cols");
  }
  Tensor Xhat(r, c);
  std::vector<double> inv_sd(r);
  for (std::size_t i = 0; i < r; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += X(i, j);
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (X(i, j) - mu) * (X(i, j) - mu);
    var /= static_cast<double>(c);
    inv_sd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) Xhat(i, j) = (X(i, j) - mu) * inv_sd[i];
  }
  const auto& gm = gamma.value();
  const auto& bt = beta.value();
  Tensor Y(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) Y(i, j) = Xhat(i, j) * gm[j] + bt[j];
  const auto ia = a.id, ig = gamma.id, ib = beta.id;
  return a.tape->record(std::move(Y), {ia, ig, ib},
                        [ia, ig, ib, Xhat = std::move(Xhat), inv_sd = std::move(inv_sd)](Tape& t, std::size_t self) {
                          const auto& G = t.grad(self);
                          const auto& gm = t.value(ig);
                          const std::size_t r = G.rows(), c = G.cols();
                          if (t.requires_grad(ig)) {
                            auto& GG = t.grad(ig);
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j) GG[j] += G(i, j) * Xhat(i, j);
                          }
                          if (t.requires_grad(ib)) {
                            auto& GB = t.grad(ib);
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j) GB[j] += G(i, j);
                          }
                          if (t.requires_grad(ia)) {
                            auto& GA = t.grad(ia);
                            const double invc = 1.0 / static_cast<double>(c);
                            for (std::size_t i = 0; i < r; ++i) {
                              double m1 = 0.0, m2 = 0.0;
                              for (std::size_t j = 0; j < c; ++j) {
                                const double dxh = G(i, j) * gm[j];
                                m1 += dxh;
                                m2 += dxh * Xhat(i, j);
                              }
                              m1 *= invc;
                              m2 *= invc;
                              for (std::size_t j = 0; j < c; ++j) {
                                const double dxh = G(i, j) * gm[j];
                                GA(i, j) += inv_sd[i] * (dxh - m1 - Xhat(i, j) * m2);
                              }
                            }
                          }
                        },
                        "layer_norm");
}

Var take_rows(Var table, const std::vector<std::size_t>& ids) {
  const auto& T = table.value();
  require_rank2(T, "take_rows");
  const std::size_t c = T.cols();
  Tensor Y(ids.size(), c);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= T.rows()) throw ShapeError("take_rows: row index " + std::to_string(ids[i]) + " out of range");
    std::copy_n(T.data().begin() + static_cast<std::ptrdiff_t>(ids[i] * c), c,
                Y.data().begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  const auto it = table.id;
  return table.tape->record(std::move(Y), {it},
                            [it, ids, c](Tape& t, std::size_t self) {
                              const auto& G = t.grad(self);
                              auto& GT = t.grad(it);
                              for (std::size_t i = 0; i < ids.size(); ++i)
                                for (std::size_t j = 0; j < c; ++j) GT(ids[i], j) += G(i, j);
                            },
                            "take_rows");
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  const auto& A = a.value();
  require_rank2(A, "slice_rows");
  if (start + count > A.rows()) throw ShapeError("slice_rows: range out of bounds");
  std::vector<std::size_t> ids(count);
  for (std::size_t i = 0; i < count; ++i) ids[i] = start + i;
  return take_rows(a, ids);
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const auto& A = a.value();
  require_rank2(A, "slice_cols");
  if (start + count > A.cols()) throw ShapeError("slice_cols: range out of bounds");
  Tensor Y(A.rows(), count);
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) Y(i, j) = A(i, start + j);
  const auto ia = a.id;
  return a.tape->record(std::move(Y), {ia},
                        [ia, start](Tape& t, std::size_t self) {
                          const auto& G = t.grad(self);
                          auto& GA = t.grad(ia);
                          for (std::size_t i = 0; i < G.rows(); ++i)
                            for (std::size_t j = 0; j < G.cols(); ++j) GA(i, start + j) += G(i, j);
                        },
                        "slice_cols");
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t r = parts.front().rows();
  std::size_t c = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    if (p.rows() != r) throw ShapeError("concat_cols: row counts differ");
    c += p.cols();
    ids.push_back(p.id);
  }
  Tensor Y(r, c);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& P = p.value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < P.cols(); ++j) Y(i, off + j) = P(i, j);
    off += P.cols();
  }
  return parts.front().tape->record(std::move(Y), ids,
                                    [ids](Tape& t, std::size_t self) {
                                      const auto& G = t.grad(self);
                                      std::size_t off = 0;
                                      for (auto id : ids) {
                                        const std::size_t w = t.value(id).cols();
                                        if (t.requires_grad(id)) {
                                          auto& GP = t.grad(id);
                                          for (std::size_t i = 0; i < G.rows(); ++i)
                                            for (std::size_t j = 0; j < w; ++j) GP(i, j) += G(i, off + j);
                                        }
                                        off += w;
                                      }
                                    },
                                    "concat_cols");
}

Var outer_add(Var col, Var row_as_col) {
  const auto& C = col.value();
  const auto& R = row_as_col.value();
  require_rank2(C, "outer_add");
  require_rank2(R, "outer_add");
  if (C.cols() != 1 || R.cols() != 1) throw ShapeError("outer_add: operands must be column vectors");
  Tensor Y(C.rows(), R.rows());
  for (std::size_t i = 0; i < C.rows(); ++i)
    for (std::size_t j = 0; j < R.rows(); ++j) Y(i, j) = C[i] + R[j];
  const auto ic = col.id, ir = row_as_col.id;
  return col.tape->record(std::move(Y), {ic, ir},
                          [ic, ir](Tape& t, std::size_t self) {
                            const auto& G = t.grad(self);
                            if (t.requires_grad(ic)) {
                              auto& GC = t.grad(ic);
                              for (std::size_t i = 0; i < G.rows(); ++i)
                                for (std::size_t j = 0; j < G.cols(); ++j) GC[i] += G(i, j);
                            }
                            if (t.requires_grad(ir)) {
                              auto& GR = t.grad(ir);
                              for (std::size_t i = 0; i < G.rows(); ++i)
                                for (std::size_t j = 0; j < G.cols(); ++j) GR[j] += G(i, j);
                            }
                          },
                          "outer_add");
}

Var gather_elements(Var a, const std::vector<std::pair<std::size_t, std::size_t>>& at) {
  const auto& A = a.value();
  require_rank2(A, "gather_elements");
  Tensor Y(at.size(), 1);
  for (std::size_t k = 0; k < at.size(); ++k) {
    if (at[k].first >= A.rows() || at[k].second >= A.cols()) throw ShapeError("gather_elements: index out of range");
    Y[k] = A(at[k].first, at[k].second);
  }
  const auto ia = a.id;
  return a.tape->record(std::move(Y), {ia},
                        [ia, at](Tape& t, std::size_t self) {
                          const auto& G = t.grad(self);
                          auto& GA = t.grad(ia);
                          for (std::size_t k = 0; k < at.size(); ++k) GA(at[k].first, at[k].second) += G[k];
                        },
                        "gather_elements");
}

Var cosine(Var a, Var b, double eps) {
  const auto& A = a.value();
  const auto& B = b.value();
  require_rank2(A, "cosine");
  if (!A.same_shape(B) || A.rows() != 1) throw ShapeError("cosine: operands must be equal-length rows");
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    dot += A[i] * B[i];
    na2 += A[i] * A[i];
    nb2 += B[i] * B[i];
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const bool clamped = na * nb <= eps;
  const double den = clamped ? eps : na * nb;
  const double c = dot / den;
  const auto ia = a.id, ib = b.id;
  return a.tape->record(Tensor(1, 1, c), {ia, ib},
                        [ia, ib, clamped, den, c, na2, nb2](Tape& t, std::size_t self) {
                          const double g = t.grad(self)[0];
                          const auto& A = t.value(ia);
                          const auto& B = t.value(ib);
                          if (t.requires_grad(ia)) {
                            auto& GA = t.grad(ia);
                            for (std::size_t i = 0; i < A.size(); ++i)
                              GA[i] += g * (B[i] / den - (clamped ? 0.0 : c * A[i] / na2));
                          }
                          if (t.requires_grad(ib)) {
                            auto& GB = t.grad(ib);
                            for (std::size_t i = 0; i < B.size(); ++i)
                              GB[i] += g * (A[i] / den - (clamped ? 0.0 : c * B[i] / nb2));
                          }
                        },
                        "cosine");
}

Var bce_with_logits(Var logits, const Tensor& targets) {
  const auto& X = logits.value();
  if (!X.same_shape(targets)) throw ShapeError("bce_with_logits: target shape differs from logits");
  if (X.size() == 0) throw ShapeError("bce_with_logits: empty operand");
  double total = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double x = X[i], y = targets[i];
    total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  }
  const double inv = 1.0 / static_cast<double>(X.size());
  const auto ix = logits.id;
  return logits.tape->record(Tensor(1, 1, total * inv), {ix},
                             [ix, targets, inv](Tape& t, std::size_t self) {
                               const double g = t.grad(self)[0];
                               const auto& X = t.value(ix);
                               auto& GX = t.grad(ix);
                               for (std::size_t i = 0; i < X.size(); ++i) {
                                 const double x = X[i];
                                 const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
                                 GX[i] += g * inv * (s - targets[i]);
                               }
                             },
                             "bce_with_logits");
}

}  // namespace archbert
