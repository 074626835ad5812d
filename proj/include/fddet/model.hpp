// Full detector: decoupling enhancer, relation pyramid and shared heads.
#pragma once

#include "fddet/evaluation.hpp"
#include "fddet/fgaad.hpp"
#include "fddet/losses.hpp"

namespace fddet {

struct ModelConfig {
  Index channels = 16;    // D
  Index num_classes = 3;  // C
  Index latent = 0;       // D*, state width of the scan branch; 0 means D
  FgaadConfig fgaad;
  PyramidConfig pyramid;
  HeadConfig head;
  LossConfig loss;
  DecodeConfig decode;
  bool use_fgaad = true;  // false bypasses the enhancer (identity)
  std::uint64_t seed = 0;

  void validate() const;
};

struct ModelParams {
  ModelConfig config;
  FgaadParams fgaad;
  PyramidParams pyramid;
  HeadParams head;

  /// Enhancer parameters are skipped while the enhancer is bypassed.
  template <typename F>
  void for_each_param(F&& f) {
    if (config.use_fgaad) fgaad.for_each_param(f);
    pyramid.for_each_param(f);
    head.for_each_param(f);
  }
};

/// Each stage draws from its own forked stream, so toggling one stage leaves
/// the initial weights of the others unchanged.
ModelParams init_model(const ModelConfig& cfg);

/// Intermediate activations of one sequence.
struct ForwardTrace {
  Var input;
  Var enhanced;
  std::vector<LevelVar> levels;
  std::vector<LevelHeadVar> heads;
};

ForwardTrace trace_forward(Var x, ModelParams& p);
std::vector<LevelHeadVar> model_forward(Var x, ModelParams& p);
HeadOutput model_forward(const FeatureSequence& x, ModelParams& p);

/// Geometry of every level for a sequence of `length` steps.
std::vector<LevelGeometry> level_geometry(Index length, const PyramidConfig& cfg);

/// Forward, decode, suppress, then rescale segments from grid steps to
/// seconds by dividing by fps_feature[b].
std::vector<DetectionCandidate> infer(const FeatureSequence& x, ModelParams& p, const std::vector<std::string>& video_ids,
                                      const std::vector<double>& fps_feature, const EvalProtocol& protocol);

}  // namespace fddet
