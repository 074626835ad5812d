#include "fddet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fddet {

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::input(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, p.trainable});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, bool needs_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), {}, needs_grad ? std::move(backward) : Backward{}, nullptr, needs_grad});
  return Var{this, nodes_.size() - 1};
}

Matrix Tape::grad(const Var& v) const {
  const auto& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Var& root) {
  if (value(root).size() != 1) throw ValidationError("backward: root must be a scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[root.id].needs_grad) return;
  nodes_[root.id].grad = Matrix::Ones(1, 1);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      // The closure may touch other nodes only, so references into nodes_ stay valid.
      n.backward(*this, n.grad, n.value);
    } else if (n.param != nullptr) {
      n.param->grad += n.grad;
    }
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) { return x * sigmoid(x); }

double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

namespace ops {
namespace {

Tape& tape_of(Var a) { return *a.tape; }

bool any_grad(std::initializer_list<Var> vs) {
  return std::any_of(vs.begin(), vs.end(), [](Var v) { return v.tape->needs_grad(v); });
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(std::string(op) + ": shape mismatch");
}

template <typename F, typename G>
Var unary(Var a, F f, G df) {
  Matrix y = a.value().unaryExpr(f);
  const auto ia = a.id;
  return tape_of(a).record(std::move(y), any_grad({a}), [ia, df](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ia, g.cwiseProduct(t.value(ia).unaryExpr(df)));
  });
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const auto ia = a.id, ib = b.id;
  return tape_of(a).record(a.value() + b.value(), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const auto ia = a.id, ib = b.id;
  return tape_of(a).record(a.value() - b.value(), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var scale(Var a, double c) {
  const auto ia = a.id;
  return tape_of(a).record(c * a.value(), any_grad({a}),
                           [ia, c](Tape& t, const Matrix& g, const Matrix&) { t.accumulate(ia, c * g); });
}

Var hadamard(Var a, Var b) {
  require_same_shape(a, b, "hadamard");
  const auto ia = a.id, ib = b.id;
  return tape_of(a).record(a.value().cwiseProduct(b.value()), any_grad({a, b}),
                           [ia, ib](Tape& t, const Matrix& g, const Matrix&) {
                             t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                             t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                           });
}

Var scale_by(Var a, Var s) {
  if (s.value().size() != 1) throw ValidationError("scale_by: scale must be 1x1");
  const auto ia = a.id, is = s.id;
  return tape_of(a).record(a.value() * s.value()(0, 0), any_grad({a, s}),
                           [ia, is](Tape& t, const Matrix& g, const Matrix&) {
                             t.accumulate(ia, g * t.value(is)(0, 0));
                             if (t.needs_grad(is)) t.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(t.value(ia)).sum()));
                           });
}

Var square(Var a) {
  const auto ia = a.id;
  return tape_of(a).record(a.value().cwiseAbs2(), any_grad({a}), [ia](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ia, 2.0 * g.cwiseProduct(t.value(ia)));
  });
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw ValidationError("matmul: inner dimension mismatch");
  const auto ia = a.id, ib = b.id;
  return tape_of(a).record(a.value() * b.value(), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g, const Matrix&) {
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ValidationError("add_row: row must be 1 x cols");
  const auto ia = a.id, ir = row.id;
  Matrix y = a.value().rowwise() + row.value().row(0);
  return tape_of(a).record(std::move(y), any_grad({a, row}), [ia, ir](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ia, g);
    t.accumulate(ir, g.colwise().sum());
  });
}

Var left_mul_const(std::shared_ptr<const Matrix> m, Var a) {
  if (m->cols() != a.rows()) throw ValidationError("left_mul_const: dimension mismatch");
  const auto ia = a.id;
  Matrix y = (*m) * a.value();
  return tape_of(a).record(std::move(y), any_grad({a}), [ia, m = std::move(m)](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ia, m->transpose() * g);
  });
}

Var gelu(Var a) { return unary(a, [](double x) { return fddet::gelu(x); }, [](double x) { return gelu_grad(x); }); }
Var silu(Var a) { return unary(a, [](double x) { return fddet::silu(x); }, [](double x) { return silu_grad(x); }); }
Var softplus(Var a) {
  return unary(a, [](double x) { return fddet::softplus(x); }, [](double x) { return fddet::sigmoid(x); });
}
Var sigmoid(Var a) {
  return unary(a, [](double x) { return fddet::sigmoid(x); },
               [](double x) {
                 const double s = fddet::sigmoid(x);
                 return s * (1.0 - s);
               });
}

Var depthwise_conv(Var x, Var w, int dilation, Padding pad) {
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Index len = xv.rows(), ch = xv.cols(), k = wv.rows();
  if (wv.cols() != ch) throw ValidationError("depthwise_conv: kernel channels mismatch");
  if (k % 2 == 0) throw ValidationError("depthwise_conv: kernel size must be odd");
  const Index half = k / 2;
  auto source = [len, pad](Index s) -> Index {
    if (s >= 0 && s < len) return s;
    if (pad == Padding::Zero) return -1;
    return std::clamp<Index>(s, 0, len - 1);
  };
  Matrix y = Matrix::Zero(len, ch);
  for (Index j = 0; j < k; ++j) {
    const Index shift = (j - half) * dilation;
    for (Index t = 0; t < len; ++t) {
      const Index s = source(t + shift);
      if (s >= 0) y.row(t) += wv.row(j).cwiseProduct(xv.row(s));
    }
  }
  const auto ix = x.id, iw = w.id;
  return tape_of(x).record(std::move(y), any_grad({x, w}),
                           [ix, iw, half, dilation, source](Tape& t, const Matrix& g, const Matrix&) {
                             const Matrix& xv = t.value(ix);
                             const Matrix& wv = t.value(iw);
                             Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
                             Matrix gw = Matrix::Zero(wv.rows(), wv.cols());
                             for (Index j = 0; j < wv.rows(); ++j) {
                               const Index shift = (j - half) * dilation;
                               for (Index r = 0; r < xv.rows(); ++r) {
                                 const Index s = source(r + shift);
                                 if (s < 0) continue;
                                 gw.row(j) += g.row(r).cwiseProduct(xv.row(s));
                                 gx.row(s) += g.row(r).cwiseProduct(wv.row(j));
                               }
                             }
                             t.accumulate(ix, gx);
                             t.accumulate(iw, gw);
                           });
}

Var conv1d(Var x, Var w, int kernel) {
  const Matrix& xv = x.value();
  const Index len = xv.rows(), din = xv.cols();
  if (kernel < 1 || kernel % 2 == 0) throw ValidationError("conv1d: kernel size must be odd");
  if (w.rows() != kernel * din) throw ValidationError("conv1d: weight rows must equal kernel * Din");
  const Index half = kernel / 2;
  Matrix cols = Matrix::Zero(len, kernel * din);
  for (Index j = 0; j < kernel; ++j) {
    const Index shift = j - half;
    const Index lo = std::max<Index>(0, -shift), hi = std::min<Index>(len, len - shift);
    if (hi > lo) cols.block(lo, j * din, hi - lo, din) = xv.middleRows(lo + shift, hi - lo);
  }
  Matrix y = cols * w.value();
  const auto ix = x.id, iw = w.id;
  return tape_of(x).record(std::move(y), any_grad({x, w}),
                           [ix, iw, kernel, half, din, cols = std::move(cols)](Tape& t, const Matrix& g, const Matrix&) {
                             if (t.needs_grad(iw)) t.accumulate(iw, cols.transpose() * g);
                             if (!t.needs_grad(ix)) return;
                             const Matrix gcols = g * t.value(iw).transpose();
                             const Index len = g.rows();
                             Matrix gx = Matrix::Zero(len, din);
                             for (Index j = 0; j < kernel; ++j) {
                               const Index shift = j - half;
                               const Index lo = std::max<Index>(0, -shift), hi = std::min<Index>(len, len - shift);
                               if (hi > lo) gx.middleRows(lo + shift, hi - lo) += gcols.block(lo, j * din, hi - lo, din);
                             }
                             t.accumulate(ix, gx);
                           });
}

Var forward_window_mean(Var x, int p) {
  if (p < 1) throw ValidationError("forward_window_mean: window must be >= 1");
  const Matrix& xv = x.value();
  const Index len = xv.rows();
  Matrix y = Matrix::Zero(len, xv.cols());
  for (Index t = 0; t < len; ++t)
    for (Index i = 0; i < p; ++i) y.row(t) += xv.row(std::min(t + i, len - 1));
  y /= static_cast<double>(p);
  const auto ix = x.id;
  return tape_of(x).record(std::move(y), any_grad({x}), [ix, p](Tape& t, const Matrix& g, const Matrix&) {
    const Index len = g.rows();
    Matrix gx = Matrix::Zero(len, g.cols());
    for (Index r = 0; r < len; ++r)
      for (Index i = 0; i < p; ++i) gx.row(std::min(r + i, len - 1)) += g.row(r);
    t.accumulate(ix, gx / static_cast<double>(p));
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Matrix& xv = x.value();
  const Index d = xv.cols();
  if (gain.cols() != d || bias.cols() != d) throw ValidationError("layer_norm: gain/bias width mismatch");
  const Vector mean = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mean;
  const Vector inv_std = ((centered.cwiseAbs2().rowwise().mean()).array() + eps).rsqrt().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix y = (xhat.array().rowwise() * gain.value().row(0).array()).matrix().rowwise() + bias.value().row(0);
  const auto ix = x.id, ig = gain.id, ib = bias.id;
  return tape_of(x).record(std::move(y), any_grad({x, gain, bias}),
                           [ix, ig, ib, inv_std, xhat = std::move(xhat)](Tape& t, const Matrix& g, const Matrix&) {
                             t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                             t.accumulate(ib, g.colwise().sum());
                             if (!t.needs_grad(ix)) return;
                             const Matrix gxhat = g.array().rowwise() * t.value(ig).row(0).array();
                             const Vector m1 = gxhat.rowwise().mean();
                             const Vector m2 = gxhat.cwiseProduct(xhat).rowwise().mean();
                             Matrix gx = (gxhat.colwise() - m1) - (xhat.array().colwise() * m2.array()).matrix();
                             gx = gx.array().colwise() * inv_std.array();
                             t.accumulate(ix, gx);
                           });
}

Var ssm_scan(Var u, Var a_raw, Var b, bool reverse) {
  const Matrix& uv = u.value();
  const Index len = uv.rows(), n = uv.cols();
  if (a_raw.rows() != 1 || a_raw.cols() != n || b.rows() != 1 || b.cols() != n)
    throw ValidationError("ssm_scan: decay/gain must be 1 x N");
  const RowVector decay = a_raw.value().row(0).unaryExpr([](double v) { return fddet::sigmoid(v); });
  const RowVector gain = b.value().row(0);
  auto step_index = [len, reverse](Index s) { return reverse ? len - 1 - s : s; };
  Matrix h(len, n);
  RowVector prev = RowVector::Zero(n);
  for (Index s = 0; s < len; ++s) {
    const Index t = step_index(s);
    prev = decay.cwiseProduct(prev) + gain.cwiseProduct(uv.row(t));
    h.row(t) = prev;
  }
  const auto iu = u.id, ia = a_raw.id, ib = b.id;
  return tape_of(u).record(std::move(h), any_grad({u, a_raw, b}),
                           [iu, ia, ib, decay, gain, step_index](Tape& t, const Matrix& g, const Matrix& h) {
                             const Matrix& uv = t.value(iu);
                             const Index len = uv.rows(), n = uv.cols();
                             Matrix gu(len, n);
                             RowVector gdecay = RowVector::Zero(n), ggain = RowVector::Zero(n);
                             RowVector delta = RowVector::Zero(n);
                             for (Index s = len; s-- > 0;) {
                               const Index tt = step_index(s);
                               delta = g.row(tt) + decay.cwiseProduct(delta);
                               gu.row(tt) = gain.cwiseProduct(delta);
                               ggain += delta.cwiseProduct(uv.row(tt));
                               if (s > 0) gdecay += delta.cwiseProduct(h.row(step_index(s - 1)));
                             }
                             t.accumulate(iu, gu);
                             t.accumulate(ib, ggain);
                             const RowVector dsig = decay.cwiseProduct(RowVector::Ones(n) - decay);
                             t.accumulate(ia, gdecay.cwiseProduct(dsig));
                           });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ValidationError("concat_cols: nothing to concatenate");
  const Index rows = parts.front().rows();
  Index total = 0;
  bool need = false;
  std::vector<std::size_t> ids;
  std::vector<Index> widths;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ValidationError("concat_cols: row mismatch");
    total += p.cols();
    need = need || p.tape->needs_grad(p);
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  Matrix y(rows, total);
  Index off = 0;
  for (const auto& p : parts) {
    y.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return parts.front().tape->record(std::move(y), need, [ids, widths](Tape& t, const Matrix& g, const Matrix&) {
    Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      t.accumulate(ids[i], g.middleCols(off, widths[i]));
      off += widths[i];
    }
  });
}

Var mean_rows(Var x) {
  const auto ix = x.id;
  const Index rows = x.rows();
  return tape_of(x).record(x.value().colwise().mean(), any_grad({x}), [ix, rows](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ix, g.replicate(rows, 1) / static_cast<double>(rows));
  });
}

Var broadcast_rows(Var row, Index rows) {
  if (row.rows() != 1) throw ValidationError("broadcast_rows: expects a single row");
  const auto ir = row.id;
  return tape_of(row).record(row.value().replicate(rows, 1), any_grad({row}),
                             [ir](Tape& t, const Matrix& g, const Matrix&) { t.accumulate(ir, g.colwise().sum()); });
}

Var max_pool2(Var x) {
  const Matrix& xv = x.value();
  const Index len = xv.rows(), ch = xv.cols(), out_len = (len + 1) / 2;
  Matrix y(out_len, ch);
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> arg(out_len, ch);
  for (Index i = 0; i < out_len; ++i) {
    for (Index c = 0; c < ch; ++c) {
      Index best = 2 * i;
      if (2 * i + 1 < len && xv(2 * i + 1, c) > xv(best, c)) best = 2 * i + 1;
      y(i, c) = xv(best, c);
      arg(i, c) = best;
    }
  }
  const auto ix = x.id;
  return tape_of(x).record(std::move(y), any_grad({x}), [ix, len, arg = std::move(arg)](Tape& t, const Matrix& g, const Matrix&) {
    Matrix gx = Matrix::Zero(len, g.cols());
    for (Index i = 0; i < g.rows(); ++i)
      for (Index c = 0; c < g.cols(); ++c) gx(arg(i, c), c) += g(i, c);
    t.accumulate(ix, gx);
  });
}

Var reverse_rows(Var x) {
  const auto ix = x.id;
  return tape_of(x).record(x.value().colwise().reverse(), any_grad({x}), [ix](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ix, g.colwise().reverse());
  });
}

Var sum(Var a) {
  const auto ia = a.id;
  const Index r = a.rows(), c = a.cols();
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().sum()), any_grad({a}),
                           [ia, r, c](Tape& t, const Matrix& g, const Matrix&) {
                             t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
                           });
}

Var weighted_sum(Var a, const Matrix& w) {
  if (w.rows() != a.rows() || w.cols() != a.cols()) throw ValidationError("weighted_sum: shape mismatch");
  const auto ia = a.id;
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().cwiseProduct(w).sum()), any_grad({a}),
                           [ia, w](Tape& t, const Matrix& g, const Matrix&) { t.accumulate(ia, g(0, 0) * w); });
}

}  // namespace ops
}  // namespace fddet
