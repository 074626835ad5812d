#include "fddet/head.hpp"

#include <algorithm>
#include <cmath>

namespace fddet {

HeadParams make_head_params(Index channels, Index num_classes, const HeadConfig& cfg, Rng& rng,
                            const std::string& prefix) {
  if (num_classes < 1) throw ValidationError("head: need at least one class");
  if (cfg.kernel < 1 || cfg.kernel % 2 == 0) throw ValidationError("head: kernel must be odd");
  const Index width = cfg.width > 0 ? cfg.width : channels;
  const Index k = cfg.kernel;
  HeadParams p;
  p.kernel = cfg.kernel;
  Index in = channels;
  for (int i = 0; i < cfg.depth; ++i) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(k * in));
    const std::string layer = std::to_string(i);
    p.cls_w.emplace_back(prefix + ".cls" + layer + ".w", draw_normal(rng, k * in, width, 0.0, stddev));
    p.cls_b.emplace_back(prefix + ".cls" + layer + ".b", Matrix::Zero(1, width));
    p.reg_w.emplace_back(prefix + ".reg" + layer + ".w", draw_normal(rng, k * in, width, 0.0, stddev));
    p.reg_b.emplace_back(prefix + ".reg" + layer + ".b", Matrix::Zero(1, width));
    in = width;
  }
  const double out_std = 0.1 / std::sqrt(static_cast<double>(k * in));
  const double prior_bias = -std::log((1.0 - cfg.prior_prob) / cfg.prior_prob);
  p.cls_out_w = Parameter(prefix + ".cls_out.w", draw_normal(rng, k * in, num_classes, 0.0, out_std));
  p.cls_out_b = Parameter(prefix + ".cls_out.b", Matrix::Constant(1, num_classes, prior_bias));
  p.reg_out_w = Parameter(prefix + ".reg_out.w", draw_normal(rng, k * in, 2, 0.0, out_std));
  p.reg_out_b = Parameter(prefix + ".reg_out.b", Matrix::Zero(1, 2));
  return p;
}

namespace {

Var tower(Var x, std::vector<Parameter>& w, std::vector<Parameter>& b, int kernel) {
  Tape& t = *x.tape;
  Var cur = x;
  for (std::size_t i = 0; i < w.size(); ++i)
    cur = ops::gelu(ops::add_row(ops::conv1d(cur, t.param(w[i]), kernel), t.param(b[i])));
  return cur;
}

}  // namespace

std::vector<LevelHeadVar> head_forward(const std::vector<LevelVar>& levels, HeadParams& p) {
  if (levels.empty()) throw ValidationError("head_forward: need at least one level");
  std::vector<LevelHeadVar> out;
  for (const auto& level : levels) {
    Tape& t = *level.features.tape;
    const Var cls = tower(level.features, p.cls_w, p.cls_b, p.kernel);
    const Var reg = tower(level.features, p.reg_w, p.reg_b, p.kernel);
    const Var logits = ops::add_row(ops::conv1d(cls, t.param(p.cls_out_w), p.kernel), t.param(p.cls_out_b));
    const Var offsets =
        ops::softplus(ops::add_row(ops::conv1d(reg, t.param(p.reg_out_w), p.kernel), t.param(p.reg_out_b)));
    out.push_back(LevelHeadVar{logits, offsets, level.stride, level.range});
  }
  return out;
}

HeadOutput head_forward(const std::vector<PyramidLevel>& levels, HeadParams& p) {
  if (levels.empty()) throw ValidationError("head_forward: need at least one level");
  HeadOutput out;
  const Index batch = levels.front().features.batch();
  for (const auto& level : levels) {
    std::vector<Matrix> logits, offsets;
    for (Index b = 0; b < batch; ++b) {
      Tape t;
      const auto heads = head_forward({LevelVar{t.constant(level.features.item(b)), level.stride, level.range}}, p);
      logits.push_back(heads.front().logits.value());
      offsets.push_back(heads.front().offsets.value());
    }
    out.logits.push_back(FeatureSequence::from_items(logits));
    out.offsets.push_back(FeatureSequence::from_items(offsets));
    out.strides.push_back(level.stride);
  }
  return out;
}

std::vector<DetectionCandidate> decode_candidates(const std::vector<Matrix>& logits, const std::vector<Matrix>& offsets,
                                                  const std::vector<Index>& strides, double true_length,
                                                  const std::string& video_id, const DecodeConfig& cfg) {
  if (logits.size() != offsets.size() || logits.size() != strides.size())
    throw ValidationError("decode_candidates: level count mismatch");
  std::vector<DetectionCandidate> out;
  for (std::size_t l = 0; l < logits.size(); ++l) {
    const double s = static_cast<double>(strides[l]);
    for (Index i = 0; i < logits[l].rows(); ++i) {
      const double anchor = static_cast<double>(i) * s;
      Segment seg{anchor - offsets[l](i, 0) * s, anchor + offsets[l](i, 1) * s};
      seg.start = std::clamp(seg.start, 0.0, true_length);
      seg.end = std::clamp(seg.end, 0.0, true_length);
      if (!(seg.end > seg.start)) continue;
      for (Index c = 0; c < logits[l].cols(); ++c) {
        const double score = sigmoid(logits[l](i, c));
        if (score < cfg.score_floor) continue;
        out.push_back(DetectionCandidate{video_id, static_cast<int>(c), score, seg});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const DetectionCandidate& a, const DetectionCandidate& b) {
    return a.score > b.score;
  });
  if (out.size() > cfg.pre_nms_topk) out.resize(cfg.pre_nms_topk);
  return out;
}

std::vector<DetectionCandidate> decode_candidates(const HeadOutput& out, const std::vector<std::string>& video_ids,
                                                  const std::vector<double>& true_lengths, const DecodeConfig& cfg) {
  if (out.logits.empty()) return {};
  const Index batch = out.logits.front().batch();
  if (static_cast<Index>(video_ids.size()) != batch || static_cast<Index>(true_lengths.size()) != batch)
    throw ValidationError("decode_candidates: need one id and length per batch item");
  std::vector<DetectionCandidate> all;
  for (Index b = 0; b < batch; ++b) {
    std::vector<Matrix> logits, offsets;
    for (std::size_t l = 0; l < out.logits.size(); ++l) {
      logits.push_back(out.logits[l].item(b));
      offsets.push_back(out.offsets[l].item(b));
    }
    auto cands = decode_candidates(logits, offsets, out.strides, true_lengths[static_cast<std::size_t>(b)],
                                   video_ids[static_cast<std::size_t>(b)], cfg);
    all.insert(all.end(), cands.begin(), cands.end());
  }
  return all;
}

}  // namespace fddet
