// Temporal IoU, non-maximum suppression and the multi-threshold mAP protocol.
#pragma once

#include "fddet/head.hpp"

#include <optional>

namespace fddet {

struct GroundTruth {
  std::string video_id;
  int label = 0;
  Segment segment;
};

enum class NmsMode { Hard, Soft };

struct EvalProtocol {
  std::vector<double> tiou_thresholds;
  NmsMode nms_mode = NmsMode::Hard;
  double nms_threshold = 0.5;
  double soft_sigma = 0.5;
  double score_floor = 0.001;
  std::size_t max_dets_per_video = 100;

  /// [0.3:0.7:0.1]
  static EvalProtocol short_range();
  /// [0.5:0.95:0.05]
  static EvalProtocol long_range();
  void validate() const;
};

/// Thresholds lo, lo+step, ..., hi (inclusive, robust to rounding).
std::vector<double> threshold_range(double lo, double hi, double step);

/// |a n b| / |a u b|. Throws on intervals with start >= end.
template <typename T>
T interval_iou(T a_start, T a_end, T b_start, T b_end) {
  if (!(a_start < a_end) || !(b_start < b_end)) throw ValidationError("degenerate interval");
  const T inter = std::max(T(0), std::min(a_end, b_end) - std::max(a_start, b_start));
  const T uni = (a_end - a_start) + (b_end - b_start) - inter;
  return inter / uni;
}
inline double interval_iou(const Segment& a, const Segment& b) {
  return interval_iou(a.start, a.end, b.start, b.end);
}

/// Deterministic ranking: score descending, then start, end, label ascending.
bool ranks_before(const DetectionCandidate& a, const DetectionCandidate& b);

/// Class-wise suppression per video, then truncation to max_dets_per_video.
std::vector<DetectionCandidate> nms(std::vector<DetectionCandidate> cands, const EvalProtocol& protocol);

/// Greedy matching of one class at one threshold. Predictions are visited in
/// score order (ties: earlier start); each takes the unmatched same-video GT
/// with the highest tIoU >= tiou (ties: earlier-starting GT).
struct MatchResult {
  std::vector<std::size_t> order;   // indices into preds, in visiting order
  std::vector<int> pred_to_gt;      // per pred (original index), -1 if unmatched
  std::vector<int> gt_to_pred;      // per gt (original index), -1 if missed
  std::size_t num_gt = 0;           // GTs of the class
};

MatchResult greedy_match(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts, int label,
                         double tiou);

/// Interpolated AP from the visiting order of a match. nullopt when the class has no GT.
std::optional<double> average_precision(const MatchResult& match);
std::optional<double> average_precision(const std::vector<DetectionCandidate>& preds,
                                        const std::vector<GroundTruth>& gts, int label, double tiou);

struct MapReport {
  std::vector<double> thresholds;
  std::vector<double> map;  // per threshold
  double average = 0.0;
  std::vector<int> classes;  // classes that have GT
};

MapReport evaluate_map(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts,
                       const EvalProtocol& protocol);

/// Aligned text table: one row per threshold plus the average.
std::string format_map_table(const MapReport& report);

}  // namespace fddet
