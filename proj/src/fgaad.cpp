#include "fddet/fgaad.hpp"

#include "fddet/spectral.hpp"

namespace fddet {

FgaadParams make_fgaad_params(Index channels, const FgaadConfig& cfg, Rng& rng, const std::string& prefix) {
  if (cfg.cutoff < 1) throw ValidationError("cutoff_c must be >= 1");
  if (cfg.window < 1) throw ValidationError("window_p must be >= 1");
  if (cfg.kernel < 1 || cfg.kernel % 2 == 0) throw ValidationError("kernel_k must be a positive odd integer");
  FgaadParams p;
  p.gfd.beta = Parameter(prefix + ".gfd.beta", Matrix::Constant(1, 1, cfg.beta_init));
  p.gfd.cutoff = cfg.cutoff;
  p.lhfe.weights = Parameter(prefix + ".lhfe.weights", draw_normal(rng, cfg.kernel, channels, 0.0, 0.1));
  p.lhfe.window = cfg.window;
  p.ln_gain = Parameter(prefix + ".ln.gain", Matrix::Ones(1, channels));
  p.ln_bias = Parameter(prefix + ".ln.bias", Matrix::Zero(1, channels));
  p.ln_eps = cfg.ln_eps;
  return p;
}

Var gfd_forward(Var x, GfdParams& p) {
  Tape& t = *x.tape;
  const Var low = ops::left_mul_const(low_pass_operator(x.rows(), p.cutoff), x);
  const Var high = x - low;
  return low + ops::scale_by(high, ops::square(t.param(p.beta)));
}

Var lhfe_forward(Var x, LhfeParams& p) {
  Tape& t = *x.tape;
  const Var deviation = x - ops::forward_window_mean(x, p.window);
  const Var local = ops::depthwise_conv(deviation, t.param(p.weights), 1, Padding::Replicate);
  return ops::gelu(local) + x;
}

Var fgaad_forward(Var x, FgaadParams& p) {
  Tape& t = *x.tape;
  // The LHFE residual already carries x, so one copy is removed before fusion.
  const Var fused = gfd_forward(x, p.gfd) + lhfe_forward(x, p.lhfe) - x;
  return ops::layer_norm(fused, t.param(p.ln_gain), t.param(p.ln_bias), p.ln_eps);
}

namespace {

template <typename P, typename Fn>
FeatureSequence eval_items(const FeatureSequence& x, P& p, Fn fn) {
  return map_items(x, [&](const Matrix& m) {
    Tape t;
    return Matrix(fn(t.constant(m), p).value());
  });
}

}  // namespace

FeatureSequence gfd_forward(const FeatureSequence& x, GfdParams& p) {
  return eval_items(x, p, [](Var v, GfdParams& q) { return gfd_forward(v, q); });
}

FeatureSequence lhfe_forward(const FeatureSequence& x, LhfeParams& p) {
  return eval_items(x, p, [](Var v, LhfeParams& q) { return lhfe_forward(v, q); });
}

FeatureSequence fgaad_forward(const FeatureSequence& x, FgaadParams& p) {
  return eval_items(x, p, [](Var v, FgaadParams& q) { return fgaad_forward(v, q); });
}

Decoupled decouple(const Matrix& x, Index cutoff, double beta) {
  Decoupled out;
  out.low = low_pass(x, cutoff);
  out.high = x - out.low;
  out.fused = out.low + beta * beta * out.high;
  return out;
}

}  // namespace fddet
