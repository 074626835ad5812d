// AdamW and the deterministic training loop.
#pragma once

#include "fddet/dataset.hpp"
#include "fddet/model.hpp"

#include <functional>
#include <span>

namespace fddet {

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 10;
  int batch_size = 4;
  double weight_decay = 0.05;
  double beta1 = 0.9, beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  double grad_clip = 1.0;  // <= 0 disables clipping
  int eval_every = 1;      // epochs between mAP evaluations; 0 disables

  void validate() const;
};

/// First and second moments, one pair per parameter in visiting order.
struct AdamState {
  std::vector<Matrix> m, v;
};

/// Thrown when a loss or gradient stops being finite.
class DivergedError : public std::runtime_error {
 public:
  DivergedError() : std::runtime_error("diverged") {}
};

/// One AdamW update at 1-based `step`: clip the global gradient norm, take
/// the bias-corrected adaptive step, then apply decoupled decay.
void optimizer_step(std::span<Parameter* const> params, AdamState& state, const TrainConfig& cfg, std::size_t step);

template <ParameterContainer P>
void optimizer_step(P& params, AdamState& state, const TrainConfig& cfg, std::size_t step) {
  const auto list = collect_params(params);
  optimizer_step(std::span<Parameter* const>(list), state, cfg, step);
}

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double avg_map = std::numeric_limits<double>::quiet_NaN();  // NaN when not evaluated
};

/// "epoch\tloss\tavg_mAP"
std::string format_epoch_log(const EpochLog& row);

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

/// Carries the parameters from the start of the failing epoch.
class TrainingAborted : public DivergedError {
 public:
  TrainingAborted(ModelParams last_good, std::vector<EpochLog> log)
      : last_good(std::move(last_good)), log(std::move(log)) {}
  ModelParams last_good;
  std::vector<EpochLog> log;
};

struct TrainOptions {
  const Dataset* eval_set = nullptr;  // mAP column source; the training set if null
  EvalProtocol protocol = EvalProtocol::long_range();
  std::function<void(const EpochLog&)> on_epoch;
};

/// Loss of one batch: sum of per-item objectives over max(positives, 1).
/// Gradients are accumulated into the parameters when `backward` is set.
double batch_loss(const Dataset& data, const std::vector<std::size_t>& indices, ModelParams& params, bool backward);

/// Suppressed detections (seconds) for every video of `data`.
std::vector<DetectionCandidate> predict_dataset(const Dataset& data, ModelParams& params, const EvalProtocol& protocol);

/// Average mAP of `params` on `data`.
MapReport evaluate_model(const Dataset& data, ModelParams& params, const EvalProtocol& protocol);

TrainResult train_run(const Dataset& data, const ModelConfig& model_cfg, const TrainConfig& cfg,
                      const TrainOptions& options = {});

/// Continues from existing parameters.
TrainResult train_run(const Dataset& data, ModelParams params, const TrainConfig& cfg, const TrainOptions& options = {});

}  // namespace fddet
