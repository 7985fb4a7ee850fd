#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "archbert/numerics/tensor.hpp"

namespace archbert {

struct Parameter {
  Tensor value;
  Tensor grad;
};

/// Named learnable tensors, iterated in name order.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  std::map<std::string, Parameter>& items() noexcept { return params_; }
  const std::map<std::string, Parameter>& items() const noexcept { return params_; }

 private:
  std::map<std::string, Parameter> params_;
};

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const;  // value of a 1x1 result
};

/// Reverse-mode recorder. Every op appends a node; backward() walks the
/// nodes in reverse and accumulates parameter gradients into
/// Parameter::grad. Nodes that do not depend on a parameter are skipped.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  /// With `track_grad` false parameters enter as constants and no
  /// backward closures are kept; values are identical either way.
  explicit Tape(bool track_grad = true) : track_grad_(track_grad) {}

  Var constant(Tensor value);
  /// Leaf bound to `p`; one node per parameter per tape.
  Var param(Parameter& p);

  /// Appends an op result. Throws NumericError naming `op` if the value
  /// has a NaN or infinity.
  Var record(Tensor value, std::vector<std::size_t> inputs, Backward backward, const char* op);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of node `id`, allocated on first use.
  Tensor& grad(std::size_t id);
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    Backward backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::map<const Parameter*, std::size_t> param_nodes_;
  bool track_grad_ = true;
};

// All ops work on rank-2 values. A 1 x c operand broadcasts over rows
// where noted.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);  // b may be 1 x c
Var sub(Var a, Var b);  // b may be 1 x c
Var mul(Var a, Var b);  // b may be 1 x c
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var sum_all(Var a);
Var mean_all(Var a);
/// Mean over rows (axis 0, result 1 x c) or columns (axis 1, result r x 1).
Var mean_axis(Var a, int axis);
/// Mean of the rows with keep[i] set. Throws DataError if none is kept.
Var masked_mean_rows(Var a, const std::vector<bool>& keep);
/// Row softmax over entries with mask[i * cols + j] set; masked entries
/// get probability exactly 0. An empty mask means no masking.
Var masked_softmax(Var a, const std::vector<std::uint8_t>& mask = {});
Var log_softmax(Var a);
Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
/// Rows of `table` at `ids`; gradients scatter-add back.
Var take_rows(Var table, const std::vector<std::size_t>& ids);
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);
/// out(i, j) = col(i, 0) + row(0, j) for col r x 1 and row c x 1.
Var outer_add(Var col, Var row_as_col);
Var leaky_relu(Var a, double slope = 0.2);
Var sigmoid(Var a);
Var gelu(Var a);  // tanh approximation
Var square(Var a);
/// Entries a(i, j) for the listed (i, j), as a k x 1 column.
Var gather_elements(Var a, const std::vector<std::pair<std::size_t, std::size_t>>& at);
/// a . b / max(|a| |b|, eps) for two 1 x d rows; 1 x 1 result.
Var cosine(Var a, Var b, double eps);
/// Mean binary cross-entropy of sigmoid(logits) against targets, both 1 x k.
Var bce_with_logits(Var logits, const Tensor& targets);

}  // namespace archbert
