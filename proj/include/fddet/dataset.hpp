// In-memory annotated videos and the seconds <-> feature-grid conversion.
#pragma once

#include "fddet/evaluation.hpp"

namespace fddet {

struct Video {
  std::string id;
  Matrix features;  // (L x D)
  double fps_feature = 1.0;
  double duration_seconds = 0.0;
  std::string feature_file;           // relative path, empty for in-memory data
  std::vector<ActionInstance> actions;  // seconds
};

struct Dataset {
  std::vector<std::string> labels;
  std::vector<Video> videos;

  Index channels() const { return videos.empty() ? 0 : videos.front().features.cols(); }
  /// All annotations as evaluation ground truth, in seconds.
  std::vector<GroundTruth> ground_truth() const;
  /// Features of videos [first, first + count) as one padded batch.
  FeatureSequence batch(std::size_t first, std::size_t count) const;
  void validate() const;
};

/// Seconds to grid steps (multiply by fps_feature).
Segment convert_time(const Segment& seconds, double fps_feature);
/// Grid steps to seconds.
Segment to_seconds(const Segment& grid, double fps_feature);

/// Annotations of one video on its feature grid.
std::vector<ActionInstance> grid_actions(const Video& v);

}  // namespace fddet
