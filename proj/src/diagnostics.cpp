#include "fddet/diagnostics.hpp"

#include <cmath>
#include <set>

namespace fddet {

const char* bin_name(Bin b) {
  switch (b) {
    case Bin::XS: return "XS";
    case Bin::S: return "S";
    case Bin::M: return "M";
    case Bin::L: return "L";
    case Bin::XL: return "XL";
  }
  return "?";
}

namespace {

Bin five_way(double v, const std::array<double, 4>& upper) {
  for (std::size_t i = 0; i < upper.size(); ++i)
    if (v <= upper[i]) return static_cast<Bin>(i);
  return Bin::XL;
}

}  // namespace

Bin coverage_bin(double coverage) { return five_way(coverage, {0.02, 0.04, 0.06, 0.08}); }
Bin length_bin(double seconds) { return five_way(seconds, {3.0, 6.0, 12.0, 18.0}); }

Bin count_bin(int instances) {
  if (instances <= 1) return Bin::XS;
  if (instances <= 40) return Bin::S;
  if (instances <= 80) return Bin::M;
  return Bin::L;
}

CharacteristicBins bin_characteristics(const ActionInstance& gt, double video_duration, int same_class_count) {
  if (!(video_duration > 0.0)) throw ValidationError("bin_characteristics: duration must be > 0");
  const double len = gt.segment.length();
  return {coverage_bin(len / video_duration), length_bin(len), count_bin(same_class_count)};
}

const char* characteristic_name(Characteristic c) {
  switch (c) {
    case Characteristic::Coverage: return "coverage";
    case Characteristic::Length: return "length";
    case Characteristic::Count: return "count";
  }
  return "?";
}

Bin bin_of(const CharacteristicBins& bins, Characteristic c) {
  switch (c) {
    case Characteristic::Coverage: return bins.coverage;
    case Characteristic::Length: return bins.length;
    case Characteristic::Count: return bins.count;
  }
  return Bin::XS;
}

std::vector<CharacteristicBins> characterize(const std::vector<GroundTruth>& gts,
                                             const std::map<std::string, double>& durations) {
  std::map<std::pair<std::string, int>, int> per_video_class;
  for (const auto& g : gts) ++per_video_class[{g.video_id, g.label}];
  std::vector<CharacteristicBins> out;
  for (const auto& g : gts) {
    const auto it = durations.find(g.video_id);
    if (it == durations.end()) throw ValidationError("no duration for video " + g.video_id);
    out.push_back(bin_characteristics({g.segment, g.label}, it->second, per_video_class[{g.video_id, g.label}]));
  }
  return out;
}

const char* fp_category_name(FpCategory c) {
  switch (c) {
    case FpCategory::TruePositive: return "true_positive";
    case FpCategory::DoubleDetection: return "double_detection";
    case FpCategory::WrongLabel: return "wrong_label";
    case FpCategory::Localization: return "localization";
    case FpCategory::Confusion: return "confusion";
    case FpCategory::Background: return "background";
  }
  return "?";
}

namespace {

constexpr double kBackgroundIou = 0.01;

std::set<int> labels_of(const std::vector<DetectionCandidate>& preds) {
  std::set<int> out;
  for (const auto& p : preds) out.insert(p.label);
  return out;
}

}  // namespace

std::vector<FpCategory> categorize_predictions(const std::vector<DetectionCandidate>& preds,
                                               const std::vector<GroundTruth>& gts, double tiou) {
  std::vector<FpCategory> out(preds.size(), FpCategory::Background);
  std::map<std::string, std::vector<std::size_t>> gt_by_video;
  for (std::size_t g = 0; g < gts.size(); ++g) gt_by_video[gts[g].video_id].push_back(g);
  for (int label : labels_of(preds)) {
    const MatchResult match = greedy_match(preds, gts, label, tiou);
    for (std::size_t i : match.order) {
      if (match.pred_to_gt[i] >= 0) {
        out[i] = FpCategory::TruePositive;
        continue;
      }
      double same = 0.0, other = 0.0;
      if (const auto it = gt_by_video.find(preds[i].video_id); it != gt_by_video.end()) {
        for (std::size_t g : it->second) {
          double& slot = gts[g].label == label ? same : other;
          slot = std::max(slot, interval_iou(preds[i].segment, gts[g].segment));
        }
      }
      if (same >= tiou)
        out[i] = FpCategory::DoubleDetection;
      else if (other >= tiou)
        out[i] = FpCategory::WrongLabel;
      else if (same >= kBackgroundIou)
        out[i] = FpCategory::Localization;
      else if (other >= kBackgroundIou)
        out[i] = FpCategory::Confusion;
      else
        out[i] = FpCategory::Background;
    }
  }
  return out;
}

FpReport classify_fp(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts, double tiou,
                     int k_max) {
  if (k_max < 1) throw ValidationError("classify_fp: k_max must be >= 1");
  FpReport report;
  report.tiou = tiou;
  const auto cats = categorize_predictions(preds, gts, tiou);

  std::map<int, std::size_t> gt_count;
  for (const auto& g : gts) ++gt_count[g.label];
  for (int k = 1; k <= k_max; ++k) {
    std::array<std::size_t, kFpCategories> counts{};
    std::size_t retained = 0;
    for (int label : labels_of(preds)) {
      // The visiting order of the matcher is the ranking used for retention.
      const auto order = greedy_match(preds, gts, label, tiou).order;
      const std::size_t keep = std::min(order.size(), static_cast<std::size_t>(k) * gt_count[label]);
      for (std::size_t r = 0; r < keep; ++r) ++counts[static_cast<std::size_t>(cats[order[r]])];
      retained += keep;
    }
    report.counts.push_back(counts);
    report.retained.push_back(retained);
  }

  EvalProtocol at_tiou;
  at_tiou.tiou_thresholds = {tiou};
  report.base_map = evaluate_map(preds, gts, at_tiou).average;
  for (std::size_t c = 1; c < kFpCategories; ++c) {
    std::vector<DetectionCandidate> kept;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (static_cast<std::size_t>(cats[i]) != c) kept.push_back(preds[i]);
    report.removal_impact[c] = evaluate_map(kept, gts, at_tiou).average - report.base_map;
  }
  return report;
}

FnReport fn_profile(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts,
                    const std::map<std::string, double>& durations, double tiou) {
  FnReport report;
  report.tiou = tiou;
  const auto bins = characterize(gts, durations);
  std::vector<bool> missed(gts.size(), true);
  std::set<int> labels;
  for (const auto& g : gts) labels.insert(g.label);
  for (int label : labels) {
    const MatchResult match = greedy_match(preds, gts, label, tiou);
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (match.gt_to_pred[g] >= 0) missed[g] = false;
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    ++report.overall.total;
    report.overall.missed += missed[g] ? 1 : 0;
    for (Characteristic c : kCharacteristics) {
      BinRate& r = report.bins[c][bin_of(bins[g], c)];
      ++r.total;
      r.missed += missed[g] ? 1 : 0;
    }
  }
  return report;
}

SensitivityReport sensitivity_profile(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts,
                                      const std::map<std::string, double>& durations, const EvalProtocol& protocol) {
  SensitivityReport report;
  report.overall = evaluate_map(preds, gts, protocol).average;
  const auto bins = characterize(gts, durations);
  for (Characteristic c : kCharacteristics) {
    std::map<Bin, std::vector<GroundTruth>> split;
    for (std::size_t g = 0; g < gts.size(); ++g) split[bin_of(bins[g], c)].push_back(gts[g]);
    for (const auto& [bin, subset] : split) {
      SensitivityEntry e;
      e.average_map = evaluate_map(preds, subset, protocol).average;
      e.relative_change = report.overall == 0.0 ? 0.0 : (e.average_map - report.overall) / report.overall;
      report.bins[c][bin] = e;
    }
  }
  return report;
}

namespace {

struct CosineSum {
  double sum = 0.0;
  std::size_t count = 0;
  void add(const Matrix& x) {
    for (Index t = 0; t + 1 < x.rows(); ++t) {
      const double na = x.row(t).norm(), nb = x.row(t + 1).norm();
      if (na == 0.0 || nb == 0.0) continue;
      sum += x.row(t).dot(x.row(t + 1)) / (na * nb);
      ++count;
    }
  }
  double mean() const { return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count); }
};

}  // namespace

double adjacent_cosine(const Matrix& x) {
  CosineSum s;
  s.add(x);
  return s.mean();
}

std::vector<LayerSimilarity> layer_similarity(ModelParams& params, const FeatureSequence& x) {
  const auto levels = static_cast<std::size_t>(params.config.pyramid.downsamples + 1);
  CosineSum input, enhanced;
  std::vector<CosineSum> tcar(levels);
  for (Index b = 0; b < x.batch(); ++b) {
    Tape t;
    const ForwardTrace tr = trace_forward(t.constant(x.item(b)), params);
    input.add(tr.input.value());
    enhanced.add(tr.enhanced.value());
    for (std::size_t l = 0; l < levels; ++l) tcar[l].add(tr.levels[l].features.value());
  }
  std::vector<LayerSimilarity> out{{"input", input.mean()}, {"fgaad", enhanced.mean()}};
  for (std::size_t l = 0; l < levels; ++l) out.push_back({"tcar.level" + std::to_string(l), tcar[l].mean()});
  return out;
}

}  // namespace fddet
