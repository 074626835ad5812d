#include "fddet/dataset.hpp"

namespace fddet {

Segment convert_time(const Segment& seconds, double fps_feature) {
  if (!(fps_feature > 0.0)) throw ValidationError("fps_feature must be > 0");
  return {seconds.start * fps_feature, seconds.end * fps_feature};
}

Segment to_seconds(const Segment& grid, double fps_feature) {
  if (!(fps_feature > 0.0)) throw ValidationError("fps_feature must be > 0");
  return {grid.start / fps_feature, grid.end / fps_feature};
}

std::vector<ActionInstance> grid_actions(const Video& v) {
  std::vector<ActionInstance> out;
  for (const auto& a : v.actions) out.push_back({convert_time(a.segment, v.fps_feature), a.label});
  return out;
}

std::vector<GroundTruth> Dataset::ground_truth() const {
  std::vector<GroundTruth> out;
  for (const auto& v : videos)
    for (const auto& a : v.actions) out.push_back({v.id, a.label, a.segment});
  return out;
}

FeatureSequence Dataset::batch(std::size_t first, std::size_t count) const {
  if (first + count > videos.size()) throw ValidationError("dataset batch out of range");
  std::vector<Matrix> items;
  for (std::size_t i = first; i < first + count; ++i) items.push_back(videos[i].features);
  return FeatureSequence::from_items(items);
}

void Dataset::validate() const {
  const Index d = channels();
  for (const auto& v : videos) {
    if (v.features.cols() != d) throw ValidationError("video " + v.id + ": inconsistent feature width");
    if (!(v.fps_feature > 0.0)) throw ValidationError("video " + v.id + ": fps_feature must be > 0");
    if (!(v.duration_seconds > 0.0)) throw ValidationError("video " + v.id + ": duration must be > 0");
    for (const auto& a : v.actions) {
      if (!(a.segment.start < a.segment.end)) throw ValidationError("video " + v.id + ": segment needs start < end");
      if (a.label < 0 || a.label >= static_cast<int>(labels.size()))
        throw ValidationError("video " + v.id + ": unknown label index " + std::to_string(a.label));
    }
  }
}

}  // namespace fddet
