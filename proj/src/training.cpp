#include "fddet/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace fddet {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ValidationError("train: learning_rate must be >= 0");
  if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("train: betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ValidationError("train: eps must be > 0");
  if (weight_decay < 0.0) throw ValidationError("train: weight_decay must be >= 0");
  if (eval_every < 0) throw ValidationError("train: eval_every must be >= 0");
}

void optimizer_step(std::span<Parameter* const> params, AdamState& state, const TrainConfig& cfg, std::size_t step) {
  if (step < 1) throw ValidationError("optimizer_step: step is 1-based");
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw ValidationError("optimizer_step: parameter set changed");

  double norm2 = 0.0;
  for (const Parameter* p : params)
    if (p->trainable) norm2 += p->grad.squaredNorm();
  if (!std::isfinite(norm2)) throw DivergedError();
  const double norm = std::sqrt(norm2);
  const double clip = cfg.grad_clip > 0.0 && norm > cfg.grad_clip ? cfg.grad_clip / norm : 1.0;

  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t), c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.trainable) continue;
    const Matrix g = clip * p.grad;
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const Matrix m_hat = state.m[i] / c1;
    const Matrix v_hat = state.v[i] / c2;
    p.value.array() -= cfg.learning_rate * m_hat.array() / (v_hat.array().sqrt() + cfg.eps);
    p.value *= 1.0 - cfg.learning_rate * cfg.weight_decay;
  }
}

std::string format_epoch_log(const EpochLog& row) {
  char buf[96];
  if (std::isnan(row.avg_map))
    std::snprintf(buf, sizeof buf, "%d\t%.6g\t-", row.epoch, row.loss);
  else
    std::snprintf(buf, sizeof buf, "%d\t%.6g\t%.6g", row.epoch, row.loss, row.avg_map);
  return buf;
}

double batch_loss(const Dataset& data, const std::vector<std::size_t>& indices, ModelParams& params, bool backward) {
  const auto& cfg = params.config;
  std::vector<TargetMap> targets;
  Index positives = 0;
  for (std::size_t i : indices) {
    const Video& v = data.videos[i];
    targets.push_back(assign_targets(grid_actions(v), level_geometry(v.features.rows(), cfg.pyramid),
                                     cfg.loss.center_radius));
    positives += targets.back().positives();
  }
  const double norm = 1.0 / static_cast<double>(std::max<Index>(positives, 1));
  double total = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    Tape tape;
    const auto heads = model_forward(tape.constant(data.videos[indices[k]].features), params);
    const Var loss = ops::scale(detection_loss_sum(heads, targets[k], cfg.loss), norm);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) throw DivergedError();
    total += value;
    if (backward) tape.backward(loss);
  }
  return total;
}

std::vector<DetectionCandidate> predict_dataset(const Dataset& data, ModelParams& params, const EvalProtocol& protocol) {
  constexpr std::size_t kChunk = 8;
  std::vector<DetectionCandidate> preds;
  for (std::size_t first = 0; first < data.videos.size(); first += kChunk) {
    const std::size_t count = std::min(kChunk, data.videos.size() - first);
    std::vector<std::string> ids;
    std::vector<double> fps;
    for (std::size_t i = first; i < first + count; ++i) {
      ids.push_back(data.videos[i].id);
      fps.push_back(data.videos[i].fps_feature);
    }
    auto chunk = infer(data.batch(first, count), params, ids, fps, protocol);
    preds.insert(preds.end(), chunk.begin(), chunk.end());
  }
  return preds;
}

MapReport evaluate_model(const Dataset& data, ModelParams& params, const EvalProtocol& protocol) {
  return evaluate_map(predict_dataset(data, params, protocol), data.ground_truth(), protocol);
}

TrainResult train_run(const Dataset& data, const ModelConfig& model_cfg, const TrainConfig& cfg,
                      const TrainOptions& options) {
  return train_run(data, init_model(model_cfg), cfg, options);
}

TrainResult train_run(const Dataset& data, ModelParams params, const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (data.videos.empty()) throw ValidationError("train: dataset is empty");
  data.validate();
  if (data.channels() != params.config.channels) throw ValidationError("train: dataset width does not match model");

  TrainResult result;
  AdamState state;
  std::size_t step = 0;
  const Rng shuffle_root(cfg.seed);
  std::vector<std::size_t> order(data.videos.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const ModelParams last_good = params;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = shuffle_root.fork(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    try {
      for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch_size));
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(first),
                                           order.begin() + static_cast<std::ptrdiff_t>(last));
        zero_grads(params);
        loss_sum += batch_loss(data, idx, params, true);
        ++batches;
        optimizer_step(params, state, cfg, ++step);
      }
    } catch (const DivergedError&) {
      throw TrainingAborted(last_good, result.log);
    }

    EpochLog row{epoch, loss_sum / static_cast<double>(batches)};
    const bool eval_now = cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    if (eval_now) row.avg_map = evaluate_model(options.eval_set ? *options.eval_set : data, params, options.protocol).average;
    result.log.push_back(row);
    if (options.on_epoch) options.on_epoch(row);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace fddet
