#include "fddet/grad_suites.hpp"

#include "fddet/model.hpp"
#include "fddet/spectral.hpp"

#include <functional>

namespace fddet {

namespace {

// Reduces an op's output with fixed random weights, so transposed or
// permuted adjoints cannot hide behind a symmetric plain sum. The weights are
// drawn on first use and then frozen.
GradOp weighted(GradOp op, std::uint64_t seed) {
  auto w = std::make_shared<Matrix>();
  return [op = std::move(op), w, seed](Tape& t, const std::vector<Var>& xs) {
    const Var out = op(t, xs);
    if (w->size() == 0) {
      Rng rng(seed);
      *w = draw_normal(rng, out.rows(), out.cols(), 0.0, 1.0);
    }
    return ops::weighted_sum(out, *w);
  };
}

struct Case {
  Matrix input;
  GradOp op;
  std::vector<Parameter*> params;
  // Owns whatever the params point into.
  std::shared_ptr<void> storage;
  double eps = 1e-5;
};

using Builder = std::function<Case(Rng&)>;

Matrix randn(Rng& rng, Index r, Index c, double sd = 1.0) { return draw_normal(rng, r, c, 0.0, sd); }

template <typename T>
Case module_case(Matrix input, std::shared_ptr<T> owner, std::function<Var(Var, T&)> fn, std::uint64_t seed) {
  Case c;
  c.input = std::move(input);
  c.params = collect_params(*owner);
  c.op = weighted([owner, fn](Tape&, const std::vector<Var>& xs) { return fn(xs[0], *owner); }, seed);
  c.storage = owner;
  return c;
}

struct Params {
  std::vector<Parameter> list;
  template <typename F>
  void for_each_param(F&& f) {
    for (auto& p : list) f(p);
  }
};

Case op_case(Matrix input, std::vector<Matrix> param_values, std::function<Var(Tape&, Var, std::vector<Var>&)> fn,
             std::uint64_t seed) {
  auto owner = std::make_shared<Params>();
  for (std::size_t i = 0; i < param_values.size(); ++i)
    owner->list.emplace_back("p" + std::to_string(i), std::move(param_values[i]));
  Case c;
  c.input = std::move(input);
  c.params = collect_params(*owner);
  c.op = weighted(
      [owner, fn](Tape& t, const std::vector<Var>& xs) {
        std::vector<Var> ps;
        for (auto& p : owner->list) ps.push_back(t.param(p));
        return fn(t, xs[0], ps);
      },
      seed);
  c.storage = owner;
  return c;
}

// The head's output layers start at 0.1 scale, which shrinks every upstream
// gradient towards the 1e-8 floor of the relative error; checks run with
// unit-scale output layers and no prior bias. Three downsamples keep the
// deepest level at 4 steps so its gradients stay above roundoff in f.
constexpr double kModelEps = 3e-5;

std::shared_ptr<ModelParams> small_model(Index channels) {
  ModelConfig cfg;
  cfg.channels = channels;
  cfg.num_classes = 2;
  cfg.seed = 3;
  cfg.pyramid.downsamples = 3;
  auto p = std::make_shared<ModelParams>(init_model(cfg));
  p->head.cls_out_w.value *= 10.0;
  p->head.reg_out_w.value *= 10.0;
  p->head.cls_out_b.value.setZero();
  return p;
}

const std::vector<std::pair<std::string, Builder>>& registry() {
  using P = std::vector<Var>;
  static const std::vector<std::pair<std::string, Builder>> suites = {
      {"add", [](Rng& r) { return op_case(randn(r, 8, 4), {randn(r, 8, 4)}, [](Tape&, Var x, P& p) { return x + p[0]; }, 1); }},
      {"sub", [](Rng& r) { return op_case(randn(r, 8, 4), {randn(r, 8, 4)}, [](Tape&, Var x, P& p) { return x - p[0]; }, 2); }},
      {"scale", [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::scale(x, -1.7); }, 3); }},
      {"hadamard",
       [](Rng& r) { return op_case(randn(r, 8, 4), {randn(r, 8, 4)}, [](Tape&, Var x, P& p) { return ops::hadamard(x, p[0]); }, 4); }},
      {"scale_by",
       [](Rng& r) {
         return op_case(randn(r, 8, 4), {Matrix::Constant(1, 1, 0.8)}, [](Tape&, Var x, P& p) { return ops::scale_by(x, p[0]); }, 5);
       }},
      {"square", [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::square(x); }, 6); }},
      {"matmul",
       [](Rng& r) { return op_case(randn(r, 8, 4), {randn(r, 4, 3)}, [](Tape&, Var x, P& p) { return ops::matmul(x, p[0]); }, 7); }},
      {"add_row",
       [](Rng& r) { return op_case(randn(r, 8, 4), {randn(r, 1, 4)}, [](Tape&, Var x, P& p) { return ops::add_row(x, p[0]); }, 8); }},
      {"low_pass",
       [](Rng& r) {
         return op_case(randn(r, 16, 4), {}, [](Tape&, Var x, P&) { return ops::left_mul_const(low_pass_operator(16, 3), x); }, 9);
       }},
      {"gelu", [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::gelu(x); }, 10); }},
      {"silu", [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::silu(x); }, 11); }},
      {"softplus", [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::softplus(x); }, 12); }},
      {"sigmoid", [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::sigmoid(x); }, 13); }},
      {"depthwise_conv.zero",
       [](Rng& r) {
         return op_case(randn(r, 12, 4), {randn(r, 3, 4)},
                        [](Tape&, Var x, P& p) { return ops::depthwise_conv(x, p[0], 1, Padding::Zero); }, 14);
       }},
      {"depthwise_conv.dilated",
       [](Rng& r) {
         return op_case(randn(r, 12, 4), {randn(r, 3, 4)},
                        [](Tape&, Var x, P& p) { return ops::depthwise_conv(x, p[0], 2, Padding::Zero); }, 15);
       }},
      {"depthwise_conv.replicate",
       [](Rng& r) {
         return op_case(randn(r, 12, 4), {randn(r, 5, 4)},
                        [](Tape&, Var x, P& p) { return ops::depthwise_conv(x, p[0], 1, Padding::Replicate); }, 16);
       }},
      {"conv1d",
       [](Rng& r) {
         return op_case(randn(r, 10, 4), {randn(r, 12, 5)}, [](Tape&, Var x, P& p) { return ops::conv1d(x, p[0], 3); }, 17);
       }},
      {"forward_window_mean",
       [](Rng& r) { return op_case(randn(r, 10, 4), {}, [](Tape&, Var x, P&) { return ops::forward_window_mean(x, 3); }, 18); }},
      {"layer_norm",
       [](Rng& r) {
         return op_case(randn(r, 8, 6), {randn(r, 1, 6, 0.5) + Matrix::Ones(1, 6), randn(r, 1, 6, 0.5)},
                        [](Tape&, Var x, P& p) { return ops::layer_norm(x, p[0], p[1], 1e-5); }, 19);
       }},
      {"ssm_scan.forward",
       [](Rng& r) {
         return op_case(randn(r, 12, 4), {randn(r, 1, 4), randn(r, 1, 4)},
                        [](Tape&, Var x, P& p) { return ops::ssm_scan(x, p[0], p[1], false); }, 20);
       }},
      {"ssm_scan.reverse",
       [](Rng& r) {
         return op_case(randn(r, 12, 4), {randn(r, 1, 4), randn(r, 1, 4)},
                        [](Tape&, Var x, P& p) { return ops::ssm_scan(x, p[0], p[1], true); }, 21);
       }},
      {"concat_cols",
       [](Rng& r) {
         return op_case(randn(r, 8, 4), {randn(r, 8, 2)}, [](Tape&, Var x, P& p) { return ops::concat_cols({x, p[0], x}); }, 22);
       }},
      {"mean_rows", [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::mean_rows(x); }, 23); }},
      {"broadcast_rows",
       [](Rng& r) {
         return op_case(randn(r, 8, 4), {randn(r, 1, 4)},
                        [](Tape&, Var x, P& p) { return ops::hadamard(ops::broadcast_rows(p[0], x.rows()), x); }, 24);
       }},
      {"max_pool2", [](Rng& r) { return op_case(randn(r, 9, 4), {}, [](Tape&, Var x, P&) { return ops::max_pool2(x); }, 25); }},
      {"reverse_rows",
       [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::reverse_rows(x); }, 26); }},
      {"sum", [](Rng& r) { return op_case(randn(r, 8, 4), {}, [](Tape&, Var x, P&) { return ops::sum(ops::square(x)); }, 27); }},
      {"weighted_sum",
       [](Rng& r) {
         Matrix w = randn(r, 8, 4);
         return op_case(randn(r, 8, 4), {}, [w](Tape&, Var x, P&) { return ops::weighted_sum(ops::square(x), w); }, 28);
       }},
      {"gfd",
       [](Rng& r) {
         auto p = std::make_shared<FgaadParams>(make_fgaad_params(4, {.cutoff = 3, .beta_init = 0.7}, r));
         return module_case<FgaadParams>(randn(r, 16, 4), p, [](Var x, FgaadParams& q) { return gfd_forward(x, q.gfd); }, 30);
       }},
      {"lhfe",
       [](Rng& r) {
         auto p = std::make_shared<FgaadParams>(make_fgaad_params(4, {}, r));
         p->lhfe.weights.value = randn(r, 3, 4);
         return module_case<FgaadParams>(randn(r, 16, 4), p, [](Var x, FgaadParams& q) { return lhfe_forward(x, q.lhfe); }, 31);
       }},
      {"fgaad",
       [](Rng& r) {
         auto p = std::make_shared<FgaadParams>(make_fgaad_params(4, {.cutoff = 3, .beta_init = 0.7}, r));
         p->lhfe.weights.value = randn(r, 3, 4);
         p->ln_gain.value += randn(r, 1, 4, 0.3);
         p->ln_bias.value = randn(r, 1, 4, 0.3);
         return module_case<FgaadParams>(randn(r, 16, 4), p, [](Var x, FgaadParams& q) { return fgaad_forward(x, q); }, 32);
       }},
      {"tcar.ssm_branch",
       [](Rng& r) {
         auto p = std::make_shared<SsmParams>(make_ssm_params(4, 4, r, "ssm"));
         return module_case<SsmParams>(randn(r, 12, 4), p, [](Var x, SsmParams& q) { return bidirectional_branch(x, q); }, 33);
       }},
      {"tcar.dilated_branch",
       [](Rng& r) {
         auto p = std::make_shared<TcarParams>(make_tcar_params(4, 4, r, "tcar"));
         return module_case<TcarParams>(randn(r, 12, 4), p,
                                        [](Var x, TcarParams& q) { return dilated_temporal_branch(x, q.dilated); }, 34);
       }},
      {"tcar.channel_branch",
       [](Rng& r) {
         auto p = std::make_shared<TcarParams>(make_tcar_params(4, 4, r, "tcar"));
         p->channel_b.value = randn(r, 1, 4, 0.3);
         return module_case<TcarParams>(randn(r, 12, 4), p,
                                        [](Var x, TcarParams& q) { return channel_branch(x, q.channel_w, q.channel_b); }, 35);
       }},
      {"tcar.block",
       [](Rng& r) {
         auto p = std::make_shared<TcarParams>(make_tcar_params(4, 4, r, "tcar"));
         return module_case<TcarParams>(randn(r, 16, 4), p, [](Var x, TcarParams& q) { return tcar_block(x, q); }, 36);
       }},
      {"plain_block",
       [](Rng& r) {
         auto p = std::make_shared<PlainBlockParams>(make_plain_block_params(4, r, "plain"));
         return module_case<PlainBlockParams>(randn(r, 16, 4), p, [](Var x, PlainBlockParams& q) { return plain_block(x, q); },
                                              37);
       }},
      {"pyramid",
       [](Rng& r) {
         auto p = std::make_shared<PyramidParams>(make_pyramid_params(4, 4, {.blocks_per_level = 1, .downsamples = 2}, r));
         return module_case<PyramidParams>(randn(r, 16, 4), p,
                                           [](Var x, PyramidParams& q) {
                                             std::vector<Var> parts;
                                             for (const auto& l : build_pyramid(x, q))
                                               parts.push_back(ops::weighted_sum(l.features, Matrix::Constant(l.features.rows(), l.features.cols(), 1.0 + static_cast<double>(l.stride) / 10.0)));
                                             Var total = parts.front();
                                             for (std::size_t i = 1; i < parts.size(); ++i) total = total + parts[i];
                                             return total;
                                           },
                                           38);
       }},
      {"head",
       [](Rng& r) {
         auto p = std::make_shared<HeadParams>(make_head_params(4, 3, {}, r));
         p->cls_out_w.value *= 10.0;
         p->reg_out_w.value *= 10.0;
         return module_case<HeadParams>(randn(r, 8, 4), p,
                                        [](Var x, HeadParams& q) {
                                          const auto h = head_forward({LevelVar{x, 1, {}}}, q);
                                          return ops::concat_cols({h[0].logits, h[0].offsets});
                                        },
                                        39);
       }},
      {"focal_loss",
       [](Rng& r) {
         std::vector<int> labels = {-1, 0, 2, -1, 1, -1, 0, -1};
         return op_case(randn(r, 8, 3), {},
                        [labels](Tape&, Var x, P&) { return focal_loss_sum(x, labels, 0.25, 2.0); }, 40);
       }},
      {"diou_loss",
       [](Rng& r) {
         LevelTargets lt;
         lt.labels = {0, -1, 1, 0, 0, -1, 2, 0};
         lt.distances = (randn(r, 8, 2).array().abs() + 0.5).matrix();
         return op_case(randn(r, 8, 2), {}, [lt](Tape&, Var x, P&) { return diou_loss_sum(ops::softplus(x), lt); }, 41);
       }},
      {"model.forward",
       [](Rng& r) {
         auto p = small_model(4);
         Case c = module_case<ModelParams>(randn(r, 32, 4), p,
                                         [](Var x, ModelParams& q) {
                                           // Zero-mean weights per level keep |f| and its roundoff small.
                                           Var total = x.tape->constant(Matrix::Zero(1, 1));
                                           Rng w(99);
                                           for (const auto& h : model_forward(x, q)) {
                                             const Var out = ops::concat_cols({h.logits, h.offsets});
                                             total = total + ops::weighted_sum(out, draw_normal(w, out.rows(), out.cols(), 0.0, 1.0));
                                           }
                                           return total;
                                         },
                                         42);
         c.eps = kModelEps;
         return c;
       }},
      {"model.loss",
       [](Rng& r) {
         auto p = small_model(4);
         const std::vector<ActionInstance> gt = {{{1.0, 4.5}, 0}, {{3.0, 11.0}, 1}, {{12.5, 20.0}, 0}, {{17.5, 29.0}, 1}};
         const auto targets = assign_targets(gt, level_geometry(32, p->config.pyramid), p->config.loss.center_radius);
         const double norm = 1.0 / static_cast<double>(std::max<Index>(targets.positives(), 1));
         Case c = module_case<ModelParams>(randn(r, 32, 4), p,
                                         [targets, norm](Var x, ModelParams& q) {
                                           return ops::scale(detection_loss_sum(model_forward(x, q), targets, q.config.loss), norm);
                                         },
                                         43);
         c.eps = kModelEps;
         return c;
       }},
  };
  return suites;
}

std::string shape_of(const Matrix& m) { return "1x" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

std::vector<std::string> gradient_suite_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : registry()) out.push_back(name);
  return out;
}

std::vector<GradSuiteResult> run_gradient_suites(std::uint64_t seed, double tolerance,
                                                 const std::vector<std::string>& only) {
  for (const auto& name : only) {
    const auto names = gradient_suite_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw ValidationError("unknown gradient suite '" + name + "'");
  }
  std::vector<GradSuiteResult> out;
  const Rng root(seed);
  std::uint64_t tag = 0;
  for (const auto& [name, build] : registry()) {
    ++tag;
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Rng rng = root.fork(tag);
    Case c = build(rng);
    GradSuiteResult r;
    r.name = name;
    r.shape = shape_of(c.input);
    r.report = check_gradient_report(c.op, FeatureSequence::from_items({c.input}), c.params, c.eps);
    r.passed = r.report.max_relative_error <= tolerance;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fddet
