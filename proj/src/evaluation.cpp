#include "fddet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace fddet {

std::vector<double> threshold_range(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ValidationError("threshold range needs lo <= hi and step > 0");
  std::vector<double> out;
  const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= count; ++i) {
    // Round to 1e-9 so 0.3 + 4*0.1 reads as 0.7, not 0.7000000000000001.
    out.push_back(std::round((lo + i * step) * 1e9) / 1e9);
  }
  return out;
}

EvalProtocol EvalProtocol::short_range() {
  EvalProtocol p;
  p.tiou_thresholds = threshold_range(0.3, 0.7, 0.1);
  return p;
}

EvalProtocol EvalProtocol::long_range() {
  EvalProtocol p;
  p.tiou_thresholds = threshold_range(0.5, 0.95, 0.05);
  return p;
}

void EvalProtocol::validate() const {
  if (tiou_thresholds.empty()) throw ValidationError("protocol needs at least one tIoU threshold");
  for (std::size_t i = 0; i < tiou_thresholds.size(); ++i) {
    const double t = tiou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) throw ValidationError("tIoU thresholds must lie in (0, 1]");
    if (i > 0 && !(t > tiou_thresholds[i - 1])) throw ValidationError("tIoU thresholds must be strictly increasing");
  }
  if (!(nms_threshold > 0.0 && nms_threshold <= 1.0)) throw ValidationError("nms threshold must lie in (0, 1]");
  if (!(soft_sigma > 0.0)) throw ValidationError("soft sigma must be > 0");
}

bool ranks_before(const DetectionCandidate& a, const DetectionCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.segment.start != b.segment.start) return a.segment.start < b.segment.start;
  if (a.segment.end != b.segment.end) return a.segment.end < b.segment.end;
  return a.label < b.label;
}

namespace {

std::vector<DetectionCandidate> suppress_class(std::vector<DetectionCandidate> c, const EvalProtocol& protocol) {
  std::stable_sort(c.begin(), c.end(), ranks_before);
  std::vector<DetectionCandidate> kept;
  if (protocol.nms_mode == NmsMode::Hard) {
    for (const auto& cand : c) {
      const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const DetectionCandidate& k) {
        return interval_iou(k.segment, cand.segment) > protocol.nms_threshold;
      });
      if (!overlaps) kept.push_back(cand);
    }
    return kept;
  }
  // Gaussian decay: after each pick, every remaining score is rescaled and the
  // list re-ranked; `c` stays sorted so the head is always the next pick.
  while (!c.empty()) {
    const DetectionCandidate pick = c.front();
    c.erase(c.begin());
    if (pick.score < protocol.score_floor) break;
    kept.push_back(pick);
    for (auto& other : c) {
      const double iou = interval_iou(pick.segment, other.segment);
      other.score *= std::exp(-(iou * iou) / protocol.soft_sigma);
    }
    std::erase_if(c, [&](const DetectionCandidate& d) { return d.score < protocol.score_floor; });
    std::stable_sort(c.begin(), c.end(), ranks_before);
  }
  return kept;
}

}  // namespace

std::vector<DetectionCandidate> nms(std::vector<DetectionCandidate> cands, const EvalProtocol& protocol) {
  protocol.validate();
  std::map<std::string, std::map<int, std::vector<DetectionCandidate>>> groups;
  for (auto& c : cands) groups[c.video_id][c.label].push_back(std::move(c));
  std::vector<DetectionCandidate> out;
  for (auto& [video, by_class] : groups) {
    std::vector<DetectionCandidate> video_out;
    for (auto& [label, list] : by_class) {
      auto kept = suppress_class(std::move(list), protocol);
      video_out.insert(video_out.end(), kept.begin(), kept.end());
    }
    std::stable_sort(video_out.begin(), video_out.end(), ranks_before);
    if (video_out.size() > protocol.max_dets_per_video) video_out.resize(protocol.max_dets_per_video);
    out.insert(out.end(), video_out.begin(), video_out.end());
  }
  return out;
}

MatchResult greedy_match(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts, int label,
                         double tiou) {
  MatchResult r;
  r.pred_to_gt.assign(preds.size(), -1);
  r.gt_to_pred.assign(gts.size(), -1);
  std::map<std::string, std::vector<std::size_t>> gt_by_video;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].label != label) continue;
    gt_by_video[gts[g].video_id].push_back(g);
    ++r.num_gt;
  }
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].label == label) r.order.push_back(i);
  std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
    return preds[a].segment.start < preds[b].segment.start;
  });
  for (std::size_t i : r.order) {
    const auto it = gt_by_video.find(preds[i].video_id);
    if (it == gt_by_video.end()) continue;
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g : it->second) {
      if (r.gt_to_pred[g] >= 0) continue;
      const double iou = interval_iou(preds[i].segment, gts[g].segment);
      if (iou < tiou) continue;
      const bool better = iou > best_iou ||
                          (iou == best_iou && gts[g].segment.start < gts[static_cast<std::size_t>(best)].segment.start);
      if (better) {
        best = static_cast<int>(g);
        best_iou = iou;
      }
    }
    if (best >= 0) {
      r.pred_to_gt[i] = best;
      r.gt_to_pred[static_cast<std::size_t>(best)] = static_cast<int>(i);
    }
  }
  return r;
}

std::optional<double> average_precision(const MatchResult& match) {
  if (match.num_gt == 0) return std::nullopt;
  const std::size_t n = match.order.size();
  if (n == 0) return 0.0;
  std::vector<double> precision(n), recall(n);
  double tp = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (match.pred_to_gt[match.order[k]] >= 0) tp += 1.0;
    precision[k] = tp / static_cast<double>(k + 1);
    recall[k] = tp / static_cast<double>(match.num_gt);
  }
  for (std::size_t k = n - 1; k-- > 0;) precision[k] = std::max(precision[k], precision[k + 1]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

std::optional<double> average_precision(const std::vector<DetectionCandidate>& preds,
                                        const std::vector<GroundTruth>& gts, int label, double tiou) {
  return average_precision(greedy_match(preds, gts, label, tiou));
}

MapReport evaluate_map(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts,
                       const EvalProtocol& protocol) {
  protocol.validate();
  MapReport report;
  report.thresholds = protocol.tiou_thresholds;
  std::set<int> classes;
  for (const auto& g : gts) classes.insert(g.label);
  report.classes.assign(classes.begin(), classes.end());
  for (double t : protocol.tiou_thresholds) {
    double sum = 0.0;
    for (int c : report.classes) sum += average_precision(preds, gts, c, t).value_or(0.0);
    report.map.push_back(report.classes.empty() ? 0.0 : sum / static_cast<double>(report.classes.size()));
  }
  report.average = std::accumulate(report.map.begin(), report.map.end(), 0.0) / static_cast<double>(report.map.size());
  return report;
}

std::string format_map_table(const MapReport& report) {
  std::string out = "tIoU     mAP\n";
  char line[64];
  for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
    std::snprintf(line, sizeof line, "%-8.2f %7.4f\n", report.thresholds[i], report.map[i]);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-8s %7.4f\n", "avg", report.average);
  out += line;
  return out;
}

}  // namespace fddet
