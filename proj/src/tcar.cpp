#include "fddet/tcar.hpp"

#include <cmath>

namespace fddet {
namespace {

Parameter normal_param(const std::string& name, Index rows, Index cols, double stddev, Rng& rng) {
  return Parameter(name, draw_normal(rng, rows, cols, 0.0, stddev));
}

double inv_sqrt(Index n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

}  // namespace

SsmParams make_ssm_params(Index channels, Index latent, Rng& rng, const std::string& prefix) {
  SsmParams p;
  p.in_proj = normal_param(prefix + ".in_proj", channels, latent, inv_sqrt(channels), rng);
  // Decays spread over (0.5, 0.95) so the scan mixes short and long memories.
  auto decay = [&](const std::string& name) {
    Matrix raw(1, latent);
    for (Index i = 0; i < latent; ++i) {
      const double lambda = rng.uniform(0.5, 0.95);
      raw(0, i) = std::log(lambda / (1.0 - lambda));
    }
    return Parameter(name, raw);
  };
  p.decay_fwd = decay(prefix + ".decay_fwd");
  p.decay_bwd = decay(prefix + ".decay_bwd");
  // Gain 1 - decay keeps the steady-state response of a constant input at unit scale.
  auto gain_for = [](const Parameter& d, const std::string& name) {
    return Parameter(name, d.value.unaryExpr([](double a) { return 1.0 - sigmoid(a); }));
  };
  p.gain_fwd = gain_for(p.decay_fwd, prefix + ".gain_fwd");
  p.gain_bwd = gain_for(p.decay_bwd, prefix + ".gain_bwd");
  p.w_h = normal_param(prefix + ".w_h", latent, latent, inv_sqrt(latent), rng);
  p.w_x = normal_param(prefix + ".w_x", latent, latent, inv_sqrt(latent), rng);
  p.w_z = normal_param(prefix + ".w_z", latent, latent, inv_sqrt(latent), rng);
  p.w_r = normal_param(prefix + ".w_r", latent, latent, inv_sqrt(latent), rng);
  p.out_proj = normal_param(prefix + ".out_proj", 2 * latent, channels, inv_sqrt(2 * latent), rng);
  return p;
}

TcarParams make_tcar_params(Index channels, Index latent, Rng& rng, const std::string& prefix) {
  TcarParams p;
  p.ssm = make_ssm_params(channels, latent, rng, prefix + ".ssm");
  for (std::size_t i = 0; i < kDilations.size(); ++i)
    p.dilated[i] = normal_param(prefix + ".dilated" + std::to_string(kDilations[i]), 3, channels, 0.3, rng);
  p.channel_w = normal_param(prefix + ".channel_w", channels, channels, inv_sqrt(channels), rng);
  p.channel_b = Parameter(prefix + ".channel_b", Matrix::Zero(1, channels));
  p.fuse_w = normal_param(prefix + ".fuse_w", 3 * channels, channels, inv_sqrt(3 * channels), rng);
  p.fuse_b = Parameter(prefix + ".fuse_b", Matrix::Zero(1, channels));
  p.ffn_w1 = normal_param(prefix + ".ffn_w1", channels, 2 * channels, inv_sqrt(channels), rng);
  p.ffn_b1 = Parameter(prefix + ".ffn_b1", Matrix::Zero(1, 2 * channels));
  p.ffn_w2 = normal_param(prefix + ".ffn_w2", 2 * channels, channels, 0.5 * inv_sqrt(2 * channels), rng);
  p.ffn_b2 = Parameter(prefix + ".ffn_b2", Matrix::Zero(1, channels));
  return p;
}

PlainBlockParams make_plain_block_params(Index channels, Rng& rng, const std::string& prefix) {
  PlainBlockParams p;
  p.kernel = normal_param(prefix + ".kernel", 3, channels, 0.3, rng);
  p.w = normal_param(prefix + ".w", channels, channels, 0.5 * inv_sqrt(channels), rng);
  p.b = Parameter(prefix + ".b", Matrix::Zero(1, channels));
  return p;
}

void zero_branches(TcarParams& p) {
  p.for_each_param([&](Parameter& q) {
    if (&q == &p.ssm.decay_fwd || &q == &p.ssm.decay_bwd) return;
    q.value.setZero();
  });
}

Var ssm_scan(Var x, SsmParams& p, Direction dir) {
  Tape& t = *x.tape;
  const Var u = ops::matmul(x, t.param(p.in_proj));
  const bool reverse = dir == Direction::Backward;
  return ops::ssm_scan(u, t.param(reverse ? p.decay_bwd : p.decay_fwd), t.param(reverse ? p.gain_bwd : p.gain_fwd),
                       reverse);
}

Var bidirectional_branch(Var x, SsmParams& p) {
  Tape& t = *x.tape;
  const Var u = ops::matmul(x, t.param(p.in_proj));
  const Var w_h = t.param(p.w_h), w_x = t.param(p.w_x), w_z = t.param(p.w_z), w_r = t.param(p.w_r);
  const Var ux = ops::matmul(u, w_x);
  const Var ur = ops::matmul(u, w_r);
  auto direction = [&](bool reverse) {
    const Var h = ops::ssm_scan(u, t.param(reverse ? p.decay_bwd : p.decay_fwd),
                                t.param(reverse ? p.gain_bwd : p.gain_fwd), reverse);
    const Var z = ops::matmul(h, w_h) + ux;
    return ops::silu(ops::matmul(z, w_z) + ur);
  };
  const Var both = ops::concat_cols({direction(false), direction(true)});
  return ops::matmul(both, t.param(p.out_proj));
}

Var dilated_temporal_branch(Var x, std::array<Parameter, 3>& kernels) {
  Tape& t = *x.tape;
  Var acc = ops::depthwise_conv(x, t.param(kernels[0]), kDilations[0], Padding::Zero);
  for (std::size_t i = 1; i < kernels.size(); ++i)
    acc = acc + ops::depthwise_conv(x, t.param(kernels[i]), kDilations[i], Padding::Zero);
  return acc;
}

Var channel_branch(Var x, Parameter& conv_w, Parameter& conv_b) {
  Tape& t = *x.tape;
  const Var pooled = ops::gelu(ops::mean_rows(x));
  const Var mixed = ops::add_row(ops::matmul(pooled, t.param(conv_w)), t.param(conv_b));
  return ops::broadcast_rows(mixed, x.rows());
}

Var tcar_block(Var x, TcarParams& p) {
  Tape& t = *x.tape;
  const Var concat = ops::concat_cols({bidirectional_branch(x, p.ssm), dilated_temporal_branch(x, p.dilated),
                                       channel_branch(x, p.channel_w, p.channel_b)});
  const Var fused = ops::add_row(ops::matmul(concat, t.param(p.fuse_w)), t.param(p.fuse_b));
  const Var hidden = ops::gelu(ops::add_row(ops::matmul(fused, t.param(p.ffn_w1)), t.param(p.ffn_b1)));
  const Var out = ops::add_row(ops::matmul(hidden, t.param(p.ffn_w2)), t.param(p.ffn_b2));
  return out + x;
}

Var plain_block(Var x, PlainBlockParams& p) {
  Tape& t = *x.tape;
  const Var local = ops::gelu(ops::depthwise_conv(x, t.param(p.kernel), 1, Padding::Zero));
  return ops::add_row(ops::matmul(local, t.param(p.w)), t.param(p.b)) + x;
}

RegressionRange regression_range(int level, int downsamples) {
  if (level < 0 || level > downsamples) throw ValidationError("regression_range: level out of range");
  RegressionRange r;
  r.lo = level == 0 ? 0.0 : 4.0 * std::ldexp(1.0, level - 1);
  r.hi = level == downsamples ? std::numeric_limits<double>::infinity() : 4.0 * std::ldexp(1.0, level);
  return r;
}

PyramidParams make_pyramid_params(Index channels, Index latent, const PyramidConfig& cfg, Rng& rng,
                                  const std::string& prefix) {
  if (cfg.blocks_per_level < 0 || cfg.downsamples < 0) throw ValidationError("pyramid: n and m must be >= 0");
  PyramidParams p;
  p.config = cfg;
  const int total = (cfg.downsamples + 1) * cfg.blocks_per_level;
  for (int i = 0; i < total; ++i) {
    const std::string name = prefix + ".L" + std::to_string(i / std::max(cfg.blocks_per_level, 1)) + ".B" +
                             std::to_string(i % std::max(cfg.blocks_per_level, 1));
    if (cfg.plain_blocks) p.plain.push_back(make_plain_block_params(channels, rng, name));
    else p.tcar.push_back(make_tcar_params(channels, latent, rng, name));
  }
  return p;
}

std::vector<LevelVar> build_pyramid(Var x, PyramidParams& p) {
  const int n = p.config.blocks_per_level, m = p.config.downsamples;
  if (x.rows() < (Index{1} << m)) throw ValidationError("sequence too short for pyramid");
  std::vector<LevelVar> levels;
  Var cur = x;
  for (int level = 0; level <= m; ++level) {
    if (level > 0) cur = ops::max_pool2(cur);
    for (int j = 0; j < n; ++j) {
      const auto idx = static_cast<std::size_t>(level * n + j);
      cur = p.config.plain_blocks ? plain_block(cur, p.plain[idx]) : tcar_block(cur, p.tcar[idx]);
    }
    levels.push_back(LevelVar{cur, Index{1} << level, regression_range(level, m)});
  }
  return levels;
}

std::vector<PyramidLevel> build_pyramid(const FeatureSequence& x, PyramidParams& p) {
  const int m = p.config.downsamples;
  std::vector<std::vector<Matrix>> per_level(static_cast<std::size_t>(m + 1));
  for (Index b = 0; b < x.batch(); ++b) {
    Tape t;
    const auto levels = build_pyramid(t.constant(x.item(b)), p);
    for (std::size_t l = 0; l < levels.size(); ++l) per_level[l].push_back(levels[l].features.value());
  }
  std::vector<PyramidLevel> out;
  for (int l = 0; l <= m; ++l)
    out.push_back(PyramidLevel{FeatureSequence::from_items(per_level[static_cast<std::size_t>(l)]), Index{1} << l,
                               regression_range(l, m)});
  return out;
}

}  // namespace fddet
