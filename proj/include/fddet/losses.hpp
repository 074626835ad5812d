// Target assignment, focal classification loss and 1-D DIoU regression loss.
#pragma once

#include "fddet/head.hpp"

namespace fddet {

struct LossConfig {
  double alpha = 0.25;
  double gamma = 2.0;
  double lambda_reg = 1.0;
  double center_radius = 1.5;  // in level strides
};

/// Targets of one sequence at one pyramid level.
struct LevelTargets {
  std::vector<int> labels;  // class of the owning GT, -1 for negatives
  Matrix distances;         // (L_l x 2) (d_s, d_e) in level-grid units; zero on negatives
  Index stride = 1;

  Index positives() const;
};

/// Targets of one sequence across all levels.
struct TargetMap {
  std::vector<LevelTargets> levels;
  Index positives() const;
};

struct LevelGeometry {
  Index length = 0;
  Index stride = 1;
  RegressionRange range;
};

/// Position i at level l is positive for GT g iff i*stride lies inside g's
/// centre region (centre +/- radius*stride, clipped to g), both distances are
/// > 0, and max(d_s, d_e)*stride falls in the level's regression range.
/// Several candidate GTs resolve to the shortest one.
TargetMap assign_targets(const std::vector<ActionInstance>& gt, const std::vector<LevelGeometry>& levels,
                         double center_radius);

/// Focal loss of one probability (clamped to [1e-7, 1-1e-7]).
double focal_loss(double p, bool is_positive, double alpha, double gamma);

/// DIoU = IoU - rho^2 / c^2 for two positive-length intervals.
double diou_1d(const Segment& pred, const Segment& gt);

/// Unnormalised focal sum over every (position, class) of one level.
Var focal_loss_sum(Var logits, const std::vector<int>& labels, double alpha, double gamma);
/// Sum over positives of 1 - DIoU between (t - d_s, t + d_e) and (t - dhat_s, t + dhat_e).
Var diou_loss_sum(Var offsets, const LevelTargets& targets);

/// Unnormalised objective of one sequence: sum focal + lambda_reg * sum (1 - DIoU).
Var detection_loss_sum(const std::vector<LevelHeadVar>& heads, const TargetMap& targets, const LossConfig& cfg);

/// Normalised objective over a batch of head outputs and their targets.
double total_loss(const HeadOutput& out, const std::vector<TargetMap>& targets, const LossConfig& cfg);

}  // namespace fddet
