#include "fddet/model.hpp"

namespace fddet {

void ModelConfig::validate() const {
  if (channels < 1) throw ValidationError("model: channels must be >= 1");
  if (num_classes < 1) throw ValidationError("model: need at least one class");
  if (latent < 0) throw ValidationError("model: latent width must be >= 0");
  if (pyramid.blocks_per_level < 0) throw ValidationError("model: blocks per level must be >= 0");
  if (pyramid.downsamples < 0) throw ValidationError("model: downsamples must be >= 0");
  if (head.depth < 0) throw ValidationError("model: head depth must be >= 0");
  if (!(head.prior_prob > 0.0 && head.prior_prob < 1.0)) throw ValidationError("model: prior must lie in (0, 1)");
}

ModelParams init_model(const ModelConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  Rng fgaad_rng = root.fork(1), pyramid_rng = root.fork(2), head_rng = root.fork(3);
  ModelParams p;
  p.config = cfg;
  p.fgaad = make_fgaad_params(cfg.channels, cfg.fgaad, fgaad_rng);
  p.pyramid = make_pyramid_params(cfg.channels, cfg.latent > 0 ? cfg.latent : cfg.channels, cfg.pyramid, pyramid_rng);
  p.head = make_head_params(cfg.channels, cfg.num_classes, cfg.head, head_rng);
  return p;
}

ForwardTrace trace_forward(Var x, ModelParams& p) {
  if (x.cols() != p.config.channels)
    throw ValidationError("model: input width " + std::to_string(x.cols()) + " does not match configured width " +
                          std::to_string(p.config.channels));
  ForwardTrace tr;
  tr.input = x;
  tr.enhanced = p.config.use_fgaad ? fgaad_forward(x, p.fgaad) : x;
  tr.levels = build_pyramid(tr.enhanced, p.pyramid);
  tr.heads = head_forward(tr.levels, p.head);
  return tr;
}

std::vector<LevelHeadVar> model_forward(Var x, ModelParams& p) { return trace_forward(x, p).heads; }

HeadOutput model_forward(const FeatureSequence& x, ModelParams& p) {
  if (x.channels() != p.config.channels)
    throw ValidationError("model: input width " + std::to_string(x.channels()) + " does not match configured width " +
                          std::to_string(p.config.channels));
  const auto levels = static_cast<std::size_t>(p.config.pyramid.downsamples + 1);
  std::vector<std::vector<Matrix>> logits(levels), offsets(levels);
  for (Index b = 0; b < x.batch(); ++b) {
    Tape t;
    const auto heads = model_forward(t.constant(x.item(b)), p);
    for (std::size_t l = 0; l < levels; ++l) {
      logits[l].push_back(heads[l].logits.value());
      offsets[l].push_back(heads[l].offsets.value());
    }
  }
  HeadOutput out;
  for (std::size_t l = 0; l < levels; ++l) {
    out.logits.push_back(FeatureSequence::from_items(logits[l]));
    out.offsets.push_back(FeatureSequence::from_items(offsets[l]));
    out.strides.push_back(Index{1} << l);
  }
  return out;
}

std::vector<LevelGeometry> level_geometry(Index length, const PyramidConfig& cfg) {
  std::vector<LevelGeometry> out;
  for (int l = 0; l <= cfg.downsamples; ++l)
    out.push_back(LevelGeometry{level_length(length, l), Index{1} << l, regression_range(l, cfg.downsamples)});
  return out;
}

std::vector<DetectionCandidate> infer(const FeatureSequence& x, ModelParams& p, const std::vector<std::string>& video_ids,
                                      const std::vector<double>& fps_feature, const EvalProtocol& protocol) {
  if (static_cast<Index>(video_ids.size()) != x.batch() || static_cast<Index>(fps_feature.size()) != x.batch())
    throw ValidationError("infer: need one id and frame rate per batch item");
  std::vector<double> lengths;
  for (Index b = 0; b < x.batch(); ++b) lengths.push_back(static_cast<double>(x.valid_length(b)));
  auto cands = nms(decode_candidates(model_forward(x, p), video_ids, lengths, p.config.decode), protocol);
  for (auto& c : cands) {
    const auto it = std::find(video_ids.begin(), video_ids.end(), c.video_id);
    const double fps = fps_feature[static_cast<std::size_t>(it - video_ids.begin())];
    c.segment = Segment{c.segment.start / fps, c.segment.end / fps};
  }
  return cands;
}

}  // namespace fddet
