// Reverse-mode differentiation over a closed set of matrix operations.
//
// Every op below records its forward value on a Tape together with a
// hand-written adjoint. Values are dense double matrices; sequences are
// time-major (L x D). Parameters are leaves bound to a Parameter, whose
// `grad` receives the accumulated adjoint when Tape::backward runs.
#pragma once

#include "fddet/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fddet {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())), trainable(train) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Anything exposing `for_each_param(fn)` visiting Parameter& in a fixed order.
template <typename P>
concept ParameterContainer = requires(P& p) { p.for_each_param([](Parameter&) {}); };

template <ParameterContainer P>
void zero_grads(P& params) {
  params.for_each_param([](Parameter& p) { p.zero_grad(); });
}

template <ParameterContainer P>
std::vector<Parameter*> collect_params(P& params) {
  std::vector<Parameter*> out;
  params.for_each_param([&](Parameter& p) { out.push_back(&p); });
  return out;
}

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad_out, const Matrix& out_value)>;

  /// Leaf that never receives a gradient.
  Var constant(Matrix value);
  /// Leaf whose gradient is kept and readable through grad().
  Var input(Matrix value);
  /// Leaf bound to `p`; backward() adds into p.grad.
  Var param(Parameter& p);

  /// Records an interior node. `needs_grad` should be true iff any parent needs one.
  Var record(Matrix value, bool needs_grad, Backward backward);

  const Matrix& value(const Var& v) const { return nodes_[v.id].value; }
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(const Var& v) const { return nodes_[v.id].needs_grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  /// Accumulated adjoint (zero matrix if nothing flowed into the node).
  Matrix grad(const Var& v) const;

  /// Adds `g` into the adjoint of node `id`, ignoring nodes that need no gradient.
  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    if (!nodes_[id].needs_grad) return;
    auto& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
  }

  /// Seeds `root` (must be 1x1) with 1 and propagates to every leaf.
  void backward(const Var& root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

enum class Padding { Zero, Replicate };

// Elementwise scalar functions (and derivatives) shared by ops and references.
double gelu(double x);
double gelu_grad(double x);
double silu(double x);
double silu_grad(double x);
double softplus(double x);
double sigmoid(double x);

namespace ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double c);
Var hadamard(Var a, Var b);
/// a * s where s is 1x1.
Var scale_by(Var a, Var s);
Var square(Var a);
Var matmul(Var a, Var b);
/// Adds a 1xD row to every row of a.
Var add_row(Var a, Var row);
/// M * a for a constant matrix M (shared, not copied onto the tape).
Var left_mul_const(std::shared_ptr<const Matrix> m, Var a);

Var gelu(Var a);
Var silu(Var a);
Var softplus(Var a);
Var sigmoid(Var a);

/// y[t,d] = sum_j w[j,d] * x[t + (j - k/2) * dilation, d]; w is (k x D), k odd.
Var depthwise_conv(Var x, Var w, int dilation, Padding pad);
/// Full temporal convolution: w is (k*Din x Dout), block j multiplies x[t + j - k/2].
/// Zero padding; length preserved.
Var conv1d(Var x, Var w, int kernel);
/// y[t] = mean(x[t .. t+p-1]) with the last row replicated past the end.
Var forward_window_mean(Var x, int p);
/// Per-row normalization over channels, then gain/bias (each 1xD).
Var layer_norm(Var x, Var gain, Var bias, double eps);
/// h_t = sigmoid(a) * h_{t-1} + b * u_t, h_{-1} = 0; a, b are 1xN. Reverse runs t = L-1..0.
Var ssm_scan(Var u, Var a_raw, Var b, bool reverse);
Var concat_cols(const std::vector<Var>& parts);
/// 1xD mean over rows.
Var mean_rows(Var x);
Var broadcast_rows(Var row, Index rows);
/// y[i] = max(x[2i], x[2i+1]) (odd tail copied); length ceil(L/2).
Var max_pool2(Var x);
Var reverse_rows(Var x);
/// Sum of all entries, as a 1x1.
Var sum(Var a);
/// sum(a .* w) for a constant w, as a 1x1.
Var weighted_sum(Var a, const Matrix& w);

}  // namespace ops

inline Var operator+(Var a, Var b) { return ops::add(a, b); }
inline Var operator-(Var a, Var b) { return ops::sub(a, b); }
inline Var operator*(double c, Var a) { return ops::scale(a, c); }

}  // namespace fddet
