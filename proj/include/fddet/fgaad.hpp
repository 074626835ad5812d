// Frequency-guided decoupling block: global low/high split with a learnable
// high-frequency gain, local deviation enhancement, and their fusion.
#pragma once

#include "fddet/autodiff.hpp"
#include "fddet/rng.hpp"

namespace fddet {

struct FgaadConfig {
  Index cutoff = 7;        // c, retained low-frequency bins
  double beta_init = 1.0;  // gain on the high band is beta^2
  int window = 3;          // p, forward-looking averaging window
  int kernel = 3;          // k, depthwise kernel over deviations (odd)
  double ln_eps = 1e-5;
};

struct GfdParams {
  Parameter beta;
  Index cutoff = 7;

  template <typename F>
  void for_each_param(F&& f) {
    f(beta);
  }
};

struct LhfeParams {
  Parameter weights;  // (kernel x D)
  int window = 3;

  int kernel() const { return static_cast<int>(weights.value.rows()); }
  template <typename F>
  void for_each_param(F&& f) {
    f(weights);
  }
};

struct FgaadParams {
  GfdParams gfd;
  LhfeParams lhfe;
  Parameter ln_gain;
  Parameter ln_bias;
  double ln_eps = 1e-5;

  template <typename F>
  void for_each_param(F&& f) {
    gfd.for_each_param(f);
    lhfe.for_each_param(f);
    f(ln_gain);
    f(ln_bias);
  }
};

FgaadParams make_fgaad_params(Index channels, const FgaadConfig& cfg, Rng& rng, const std::string& prefix = "fgaad");

/// L(x) + beta^2 (x - L(x)).
Var gfd_forward(Var x, GfdParams& p);
/// GeLU(depthwise_conv(x - window_mean(x))) + x.
Var lhfe_forward(Var x, LhfeParams& p);
/// LayerNorm(gfd(x) + lhfe(x) - x).
Var fgaad_forward(Var x, FgaadParams& p);

// Value-level forms over a batch (each item at its own valid length).
FeatureSequence gfd_forward(const FeatureSequence& x, GfdParams& p);
FeatureSequence lhfe_forward(const FeatureSequence& x, LhfeParams& p);
FeatureSequence fgaad_forward(const FeatureSequence& x, FgaadParams& p);

/// Components of the global split for inspection.
struct Decoupled {
  Matrix low;    // L(x)
  Matrix high;   // x - L(x)
  Matrix fused;  // L(x) + beta^2 H(x)
};
Decoupled decouple(const Matrix& x, Index cutoff, double beta);

}  // namespace fddet
