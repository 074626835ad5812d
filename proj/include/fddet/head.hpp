// Anchor-free classification / boundary-distance head shared across pyramid
// levels, and decoding of its outputs into scored segments.
#pragma once

#include "fddet/tcar.hpp"

namespace fddet {

struct HeadConfig {
  Index width = 0;  // tower width; 0 means "same as input channels"
  int depth = 2;
  int kernel = 3;
  double prior_prob = 0.01;  // initial foreground probability of the classifier bias
};

struct HeadParams {
  std::vector<Parameter> cls_w, cls_b;  // tower layers
  std::vector<Parameter> reg_w, reg_b;
  Parameter cls_out_w, cls_out_b;  // (k*W x C), (1 x C)
  Parameter reg_out_w, reg_out_b;  // (k*W x 2), (1 x 2)
  int kernel = 3;

  Index num_classes() const { return cls_out_b.value.cols(); }
  template <typename F>
  void for_each_param(F&& f) {
    for (std::size_t i = 0; i < cls_w.size(); ++i) {
      f(cls_w[i]);
      f(cls_b[i]);
    }
    for (std::size_t i = 0; i < reg_w.size(); ++i) {
      f(reg_w[i]);
      f(reg_b[i]);
    }
    f(cls_out_w);
    f(cls_out_b);
    f(reg_out_w);
    f(reg_out_b);
  }
};

HeadParams make_head_params(Index channels, Index num_classes, const HeadConfig& cfg, Rng& rng,
                            const std::string& prefix = "head");

/// Per-level head output for one sequence.
struct LevelHeadVar {
  Var logits;   // (L_l x C)
  Var offsets;  // (L_l x 2), (d_s, d_e) >= 0 in level-grid units
  Index stride = 1;
  RegressionRange range;
};

std::vector<LevelHeadVar> head_forward(const std::vector<LevelVar>& levels, HeadParams& p);

/// Batched values: logits[l] is (B, L_l, C), offsets[l] is (B, L_l, 2).
struct HeadOutput {
  std::vector<FeatureSequence> logits;
  std::vector<FeatureSequence> offsets;
  std::vector<Index> strides;
};

HeadOutput head_forward(const std::vector<PyramidLevel>& levels, HeadParams& p);

struct DetectionCandidate {
  std::string video_id;
  int label = 0;
  double score = 0.0;
  Segment segment;  // input-grid units unless converted
};

struct DecodeConfig {
  double score_floor = 0.001;
  std::size_t pre_nms_topk = 200;
};

/// Decodes one sequence. `logits[l]` / `offsets[l]` are (L_l x C) / (L_l x 2);
/// position i at stride s maps to (i s - d_s s, i s + d_e s), clamped to [0, true_length].
std::vector<DetectionCandidate> decode_candidates(const std::vector<Matrix>& logits, const std::vector<Matrix>& offsets,
                                                  const std::vector<Index>& strides, double true_length,
                                                  const std::string& video_id, const DecodeConfig& cfg);

/// Batch form; item b uses `video_ids[b]` and `true_lengths[b]`.
std::vector<DetectionCandidate> decode_candidates(const HeadOutput& out, const std::vector<std::string>& video_ids,
                                                  const std::vector<double>& true_lengths, const DecodeConfig& cfg);

}  // namespace fddet
