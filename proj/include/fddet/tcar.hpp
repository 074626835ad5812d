// Long/short-term relation block (bidirectional state-space branch,
// multi-dilation temporal branch, pooled channel branch, FFN fusion) and the
// temporal pyramid built from stacks of those blocks.
#pragma once

#include "fddet/autodiff.hpp"
#include "fddet/rng.hpp"

#include <array>
#include <limits>

namespace fddet {

struct SsmParams {
  Parameter in_proj;               // D x N
  Parameter decay_fwd, decay_bwd;  // 1 x N, unconstrained; decay = sigmoid(.)
  Parameter gain_fwd, gain_bwd;    // 1 x N
  Parameter w_h, w_x, w_z, w_r;    // N x N
  Parameter out_proj;              // 2N x D

  Index latent() const { return in_proj.value.cols(); }
  template <typename F>
  void for_each_param(F&& f) {
    for (Parameter* p : {&in_proj, &decay_fwd, &decay_bwd, &gain_fwd, &gain_bwd, &w_h, &w_x, &w_z, &w_r, &out_proj})
      f(*p);
  }
};

inline constexpr std::array<int, 3> kDilations = {1, 2, 4};

struct TcarParams {
  SsmParams ssm;
  std::array<Parameter, 3> dilated;  // 3 x D per dilation rate, no bias
  Parameter channel_w, channel_b;    // D x D, 1 x D
  Parameter fuse_w, fuse_b;          // 3D x D, 1 x D
  Parameter ffn_w1, ffn_b1;          // D x 2D, 1 x 2D
  Parameter ffn_w2, ffn_b2;          // 2D x D, 1 x D

  template <typename F>
  void for_each_param(F&& f) {
    ssm.for_each_param(f);
    for (auto& k : dilated) f(k);
    for (Parameter* p : {&channel_w, &channel_b, &fuse_w, &fuse_b, &ffn_w1, &ffn_b1, &ffn_w2, &ffn_b2}) f(*p);
  }
};

/// Ablation stand-in for a TCAR block: x + W gelu(depthwise_conv3(x)) + b.
struct PlainBlockParams {
  Parameter kernel;  // 3 x D
  Parameter w, b;    // D x D, 1 x D

  template <typename F>
  void for_each_param(F&& f) {
    f(kernel);
    f(w);
    f(b);
  }
};

SsmParams make_ssm_params(Index channels, Index latent, Rng& rng, const std::string& prefix);
TcarParams make_tcar_params(Index channels, Index latent, Rng& rng, const std::string& prefix);
PlainBlockParams make_plain_block_params(Index channels, Rng& rng, const std::string& prefix);
/// Zeroes every weight, leaving decay untouched.
void zero_branches(TcarParams& p);

enum class Direction { Forward, Backward };

/// Hidden states of one direction: h_t = sigmoid(a) h_{t-1} + b u_t, u = x in_proj.
Var ssm_scan(Var x, SsmParams& p, Direction dir);
Var bidirectional_branch(Var x, SsmParams& p);
Var dilated_temporal_branch(Var x, std::array<Parameter, 3>& kernels);
Var channel_branch(Var x, Parameter& conv_w, Parameter& conv_b);
Var tcar_block(Var x, TcarParams& p);
Var plain_block(Var x, PlainBlockParams& p);

/// (lo, hi] in input-grid units.
struct RegressionRange {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double v) const { return v > lo && v <= hi; }
};

/// Doubling scheme: (0,4], (4,8], (8,16], ..., last level open-ended.
RegressionRange regression_range(int level, int downsamples);
inline Index level_length(Index length, int level) { return (length + (Index{1} << level) - 1) >> level; }

struct PyramidConfig {
  int blocks_per_level = 2;  // n
  int downsamples = 5;       // m
  bool plain_blocks = false; // ablation: TCAR replaced by PlainBlock
};

struct PyramidParams {
  std::vector<TcarParams> tcar;     // (m+1) * n, level-major
  std::vector<PlainBlockParams> plain;
  PyramidConfig config;

  template <typename F>
  void for_each_param(F&& f) {
    for (auto& b : tcar) b.for_each_param(f);
    for (auto& b : plain) b.for_each_param(f);
  }
};

PyramidParams make_pyramid_params(Index channels, Index latent, const PyramidConfig& cfg, Rng& rng,
                                  const std::string& prefix = "pyramid");

struct LevelVar {
  Var features;
  Index stride = 1;
  RegressionRange range;
};

/// n blocks at full resolution, then m times: stride-2 max pool followed by n blocks.
std::vector<LevelVar> build_pyramid(Var x, PyramidParams& p);

struct PyramidLevel {
  FeatureSequence features;
  Index stride = 1;
  RegressionRange range;
};

std::vector<PyramidLevel> build_pyramid(const FeatureSequence& x, PyramidParams& p);

}  // namespace fddet
