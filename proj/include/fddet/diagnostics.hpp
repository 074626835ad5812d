// Error analysis: characteristic bins, false-positive taxonomy, miss rates,
// per-bin sensitivity, and adjacent-step feature similarity probes.
#pragma once

#include "fddet/model.hpp"

#include <array>
#include <map>

namespace fddet {

enum class Bin { XS, S, M, L, XL };
const char* bin_name(Bin b);

/// (0,.02] (.02,.04] (.04,.06] (.06,.08] (.08,1]
Bin coverage_bin(double coverage);
/// Seconds: (0,3] (3,6] (6,12] (12,18] (18,inf)
Bin length_bin(double seconds);
/// {1} [2,40] (40,80] (80,inf); never XL.
Bin count_bin(int instances);

struct CharacteristicBins {
  Bin coverage = Bin::XS;
  Bin length = Bin::XS;
  Bin count = Bin::XS;
};

CharacteristicBins bin_characteristics(const ActionInstance& gt, double video_duration, int same_class_count);

enum class Characteristic { Coverage, Length, Count };
inline constexpr std::array<Characteristic, 3> kCharacteristics = {Characteristic::Coverage, Characteristic::Length,
                                                                    Characteristic::Count};
const char* characteristic_name(Characteristic c);
Bin bin_of(const CharacteristicBins& bins, Characteristic c);

/// Bins of every GT, using the video durations (seconds) keyed by video id.
std::vector<CharacteristicBins> characterize(const std::vector<GroundTruth>& gts,
                                             const std::map<std::string, double>& durations);

enum class FpCategory { TruePositive, DoubleDetection, WrongLabel, Localization, Confusion, Background };
inline constexpr std::size_t kFpCategories = 6;
const char* fp_category_name(FpCategory c);

/// Category of each prediction; index-aligned with `preds`.
std::vector<FpCategory> categorize_predictions(const std::vector<DetectionCandidate>& preds,
                                               const std::vector<GroundTruth>& gts, double tiou);

struct FpReport {
  double tiou = 0.5;
  /// counts[k-1][category] over the top k*G predictions of every class.
  std::vector<std::array<std::size_t, kFpCategories>> counts;
  std::vector<std::size_t> retained;  // per k
  /// mAP at tiou gained by deleting each error category from the full
  /// prediction set; the TruePositive slot is unused (0).
  std::array<double, kFpCategories> removal_impact{};
  double base_map = 0.0;
};

FpReport classify_fp(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts, double tiou,
                     int k_max);

struct BinRate {
  std::size_t total = 0;
  std::size_t missed = 0;
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(missed) / static_cast<double>(total); }
};

struct FnReport {
  double tiou = 0.5;
  BinRate overall;
  std::map<Characteristic, std::map<Bin, BinRate>> bins;  // only non-empty bins
};

FnReport fn_profile(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts,
                    const std::map<std::string, double>& durations, double tiou);

struct SensitivityEntry {
  double average_map = 0.0;
  double relative_change = 0.0;  // (bin - overall) / overall, 0 if overall is 0
};

struct SensitivityReport {
  double overall = 0.0;
  std::map<Characteristic, std::map<Bin, SensitivityEntry>> bins;  // empty bins absent
};

SensitivityReport sensitivity_profile(const std::vector<DetectionCandidate>& preds, const std::vector<GroundTruth>& gts,
                                      const std::map<std::string, double>& durations, const EvalProtocol& protocol);

/// Mean cosine similarity of consecutive valid steps; zero-norm pairs are
/// skipped. NaN when no pair qualifies.
double adjacent_cosine(const Matrix& x);

struct LayerSimilarity {
  std::string layer;
  double value = 0.0;
};

/// Probes: "input", "fgaad", "tcar.level<l>". Pairs are pooled across the batch.
std::vector<LayerSimilarity> layer_similarity(ModelParams& params, const FeatureSequence& x);

}  // namespace fddet
