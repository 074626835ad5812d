#include "fddet/losses.hpp"

#include <algorithm>
#include <cmath>

namespace fddet {
namespace {

constexpr double kProbFloor = 1e-7;

struct FocalTerm {
  double value;
  double dlogit;
};

FocalTerm focal_term(double logit, bool positive, double alpha, double gamma) {
  const double raw = sigmoid(logit);
  const bool clamped = raw < kProbFloor || raw > 1.0 - kProbFloor;
  const double p = std::clamp(raw, kProbFloor, 1.0 - kProbFloor);
  double value = 0.0, dp = 0.0;
  if (positive) {
    const double q = 1.0 - p;
    value = -alpha * std::pow(q, gamma) * std::log(p);
    dp = alpha * (gamma * std::pow(q, gamma - 1.0) * std::log(p) - std::pow(q, gamma) / p);
  } else {
    const double q = 1.0 - p;
    value = -(1.0 - alpha) * std::pow(p, gamma) * std::log(q);
    dp = -(1.0 - alpha) * (gamma * std::pow(p, gamma - 1.0) * std::log(q) - std::pow(p, gamma) / q);
  }
  return {value, clamped ? 0.0 : dp * raw * (1.0 - raw)};
}

struct DiouTerm {
  double loss;
  double d_start;  // d loss / d pred.start
  double d_end;    // d loss / d pred.end
};

DiouTerm diou_term(double ps, double pe, double gs, double ge) {
  const double lo = std::max(ps, gs), hi = std::min(pe, ge);
  const double inter = std::max(0.0, hi - lo);
  const bool overlap = hi > lo;
  const double uni = (pe - ps) + (ge - gs) - inter;
  const double enc = std::max(pe, ge) - std::min(ps, gs);
  const double rho = 0.5 * (ps + pe) - 0.5 * (gs + ge);
  const double iou = inter / uni;
  const double pen = rho * rho / (enc * enc);

  const double di_de = overlap && pe < ge ? 1.0 : 0.0;
  const double di_ds = overlap && ps > gs ? -1.0 : 0.0;
  const double du_de = 1.0 - di_de;
  const double du_ds = -1.0 - di_ds;
  const double dc_de = pe > ge ? 1.0 : 0.0;
  const double dc_ds = ps < gs ? -1.0 : 0.0;
  auto diou_grad = [&](double di, double du, double dc) {
    const double diou_iou = (di * uni - inter * du) / (uni * uni);
    const double dpen = 2.0 * rho * 0.5 / (enc * enc) - 2.0 * rho * rho * dc / (enc * enc * enc);
    return -diou_iou + dpen;
  };
  return {1.0 - (iou - pen), diou_grad(di_ds, du_ds, dc_ds), diou_grad(di_de, du_de, dc_de)};
}

}  // namespace

Index LevelTargets::positives() const {
  return static_cast<Index>(std::count_if(labels.begin(), labels.end(), [](int l) { return l >= 0; }));
}

Index TargetMap::positives() const {
  Index n = 0;
  for (const auto& l : levels) n += l.positives();
  return n;
}

TargetMap assign_targets(const std::vector<ActionInstance>& gt, const std::vector<LevelGeometry>& levels,
                         double center_radius) {
  for (const auto& g : gt)
    if (!(g.segment.start < g.segment.end)) throw ValidationError("assign_targets: ground truth needs start < end");
  TargetMap map;
  for (const auto& geo : levels) {
    LevelTargets lt;
    lt.stride = geo.stride;
    lt.labels.assign(static_cast<std::size_t>(geo.length), -1);
    lt.distances = Matrix::Zero(geo.length, 2);
    const double s = static_cast<double>(geo.stride);
    for (Index i = 0; i < geo.length; ++i) {
      const double coord = static_cast<double>(i) * s;
      const ActionInstance* best = nullptr;
      for (const auto& g : gt) {
        const double c = g.segment.center();
        const double lo = std::max(g.segment.start, c - center_radius * s);
        const double hi = std::min(g.segment.end, c + center_radius * s);
        if (coord < lo || coord > hi) continue;
        const double ds = coord - g.segment.start, de = g.segment.end - coord;
        if (ds <= 0.0 || de <= 0.0) continue;
        if (!geo.range.contains(std::max(ds, de))) continue;
        const bool better = best == nullptr || g.segment.length() < best->segment.length() ||
                            (g.segment.length() == best->segment.length() && g.segment.start < best->segment.start);
        if (better) best = &g;
      }
      if (best == nullptr) continue;
      lt.labels[static_cast<std::size_t>(i)] = best->label;
      lt.distances(i, 0) = (coord - best->segment.start) / s;
      lt.distances(i, 1) = (best->segment.end - coord) / s;
    }
    map.levels.push_back(std::move(lt));
  }
  return map;
}

double focal_loss(double p, bool is_positive, double alpha, double gamma) {
  const double pc = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  if (is_positive) return -alpha * std::pow(1.0 - pc, gamma) * std::log(pc);
  return -(1.0 - alpha) * std::pow(pc, gamma) * std::log(1.0 - pc);
}

double diou_1d(const Segment& pred, const Segment& gt) {
  if (!(pred.end > pred.start) || !(gt.end > gt.start)) throw ValidationError("degenerate interval");
  return 1.0 - diou_term(pred.start, pred.end, gt.start, gt.end).loss;
}

Var focal_loss_sum(Var logits, const std::vector<int>& labels, double alpha, double gamma) {
  const Matrix& z = logits.value();
  if (static_cast<Index>(labels.size()) != z.rows()) throw ValidationError("focal_loss_sum: label count mismatch");
  Matrix dz(z.rows(), z.cols());
  double total = 0.0;
  for (Index t = 0; t < z.rows(); ++t) {
    for (Index c = 0; c < z.cols(); ++c) {
      const auto term = focal_term(z(t, c), labels[static_cast<std::size_t>(t)] == c, alpha, gamma);
      total += term.value;
      dz(t, c) = term.dlogit;
    }
  }
  const auto id = logits.id;
  return logits.tape->record(Matrix::Constant(1, 1, total), logits.tape->needs_grad(logits),
                             [id, dz = std::move(dz)](Tape& t, const Matrix& g, const Matrix&) {
                               t.accumulate(id, g(0, 0) * dz);
                             });
}

Var diou_loss_sum(Var offsets, const LevelTargets& targets) {
  const Matrix& d = offsets.value();
  if (d.rows() != static_cast<Index>(targets.labels.size()) || d.cols() != 2)
    throw ValidationError("diou_loss_sum: offsets must be (L x 2) matching targets");
  Matrix dd = Matrix::Zero(d.rows(), 2);
  double total = 0.0;
  for (Index t = 0; t < d.rows(); ++t) {
    if (targets.labels[static_cast<std::size_t>(t)] < 0) continue;
    // Relative to position t: pred (-d_s, d_e), gt (-dhat_s, dhat_e).
    const auto term = diou_term(-d(t, 0), d(t, 1), -targets.distances(t, 0), targets.distances(t, 1));
    total += term.loss;
    dd(t, 0) = -term.d_start;
    dd(t, 1) = term.d_end;
  }
  const auto id = offsets.id;
  return offsets.tape->record(Matrix::Constant(1, 1, total), offsets.tape->needs_grad(offsets),
                              [id, dd = std::move(dd)](Tape& t, const Matrix& g, const Matrix&) {
                                t.accumulate(id, g(0, 0) * dd);
                              });
}

Var detection_loss_sum(const std::vector<LevelHeadVar>& heads, const TargetMap& targets, const LossConfig& cfg) {
  if (heads.size() != targets.levels.size()) throw ValidationError("detection_loss: level count mismatch");
  Var total = heads.front().logits.tape->constant(Matrix::Zero(1, 1));
  for (std::size_t l = 0; l < heads.size(); ++l) {
    total = total + focal_loss_sum(heads[l].logits, targets.levels[l].labels, cfg.alpha, cfg.gamma);
    if (targets.levels[l].positives() > 0 && cfg.lambda_reg != 0.0)
      total = total + ops::scale(diou_loss_sum(heads[l].offsets, targets.levels[l]), cfg.lambda_reg);
  }
  return total;
}

double total_loss(const HeadOutput& out, const std::vector<TargetMap>& targets, const LossConfig& cfg) {
  if (out.logits.empty()) return 0.0;
  const Index batch = out.logits.front().batch();
  if (static_cast<Index>(targets.size()) != batch) throw ValidationError("total_loss: need one TargetMap per item");
  double sum = 0.0;
  Index positives = 0;
  for (Index b = 0; b < batch; ++b) {
    const auto& tm = targets[static_cast<std::size_t>(b)];
    Tape t;
    std::vector<LevelHeadVar> heads;
    for (std::size_t l = 0; l < out.logits.size(); ++l)
      heads.push_back(LevelHeadVar{t.constant(out.logits[l].item(b)), t.constant(out.offsets[l].item(b)),
                                   out.strides[l], {}});
    sum += detection_loss_sum(heads, tm, cfg).value()(0, 0);
    positives += tm.positives();
  }
  return sum / static_cast<double>(std::max<Index>(positives, 1));
}

}  // namespace fddet
