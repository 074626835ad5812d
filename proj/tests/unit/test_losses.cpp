#include "helpers.hpp"

#include "fddet/losses.hpp"

#include <cmath>

using namespace fddet;
using fddet::test::randn;

namespace {

std::vector<LevelGeometry> geometry(Index length, int downsamples) {
  std::vector<LevelGeometry> out;
  for (int l = 0; l <= downsamples; ++l)
    out.push_back({level_length(length, l), Index{1} << l, regression_range(l, downsamples)});
  return out;
}

}  // namespace

TEST_CASE("assign_targets examples") {
  const auto geo = geometry(128, 5);
  const TargetMap none = assign_targets({}, geo, 1.5);
  CHECK(none.positives() == 0);
  REQUIRE(none.levels.size() == 6);

  const TargetMap one = assign_targets({{{10.0, 20.0}, 2}}, geo, 1.0);
  const LevelTargets& l1 = one.levels[1];
  CHECK(l1.stride == 2);
  CHECK(l1.labels[7] == 2);
  CHECK(l1.distances(7, 0) == 2.0);
  CHECK(l1.distances(7, 1) == 3.0);
  // Coordinate 14 is not owned by level 0 (max distance 6 is outside (0, 4]).
  CHECK(one.levels[0].labels[14] == -1);

  // Coordinate 48 at stride 4 is valid for both GTs; the shorter one owns it.
  const TargetMap tie = assign_targets({{{38.0, 62.0}, 0}, {{40.0, 60.0}, 1}}, geo, 100.0);
  CHECK(tie.levels[2].labels[12] == 1);
  CHECK(tie.levels[2].distances(12, 0) == 2.0);
  CHECK(tie.levels[2].distances(12, 1) == 3.0);
  const TargetMap tie_rev = assign_targets({{{40.0, 60.0}, 1}, {{38.0, 62.0}, 0}}, geo, 100.0);
  CHECK(tie_rev.levels[2].labels[12] == 1);

  // Nested GTs: no position inside the short GT is ever given to the long one
  // when the short one is also valid there.
  const TargetMap nested = assign_targets({{{0.0, 100.0}, 0}, {{40.0, 60.0}, 1}}, geo, 100.0);
  const TargetMap inner = assign_targets({{{40.0, 60.0}, 1}}, geo, 100.0);
  for (std::size_t l = 0; l < geo.size(); ++l)
    for (std::size_t i = 0; i < inner.levels[l].labels.size(); ++i)
      if (inner.levels[l].labels[i] == 1) CHECK(nested.levels[l].labels[i] == 1);
}

TEST_CASE("every positive satisfies the assignment contract") {
  Rng r(5);
  const auto geo = geometry(200, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ActionInstance> gt;
    for (int k = 0; k < 4; ++k) {
      const double s = r.uniform(0, 180), len = r.uniform(1, 100);
      gt.push_back({{s, std::min(200.0, s + len)}, static_cast<int>(r.uniform_int(0, 2))});
    }
    const double radius = r.uniform(0.5, 2.5);
    const TargetMap tm = assign_targets(gt, geo, radius);
    Index total = 0;
    for (std::size_t l = 0; l < tm.levels.size(); ++l) {
      const auto& lv = tm.levels[l];
      for (std::size_t i = 0; i < lv.labels.size(); ++i) {
        if (lv.labels[i] < 0) {
          CHECK(lv.distances.row(Index(i)).isZero(0.0));
          continue;
        }
        ++total;
        const double ds = lv.distances(Index(i), 0), de = lv.distances(Index(i), 1);
        CHECK(ds > 0.0);
        CHECK(de > 0.0);
        CHECK(geo[l].range.contains(std::max(ds, de) * double(lv.stride)));
      }
    }
    CHECK(total == tm.positives());
  }
}

TEST_CASE("focal loss examples and monotonicity") {
  CHECK(focal_loss(1.0, true, 0.25, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(focal_loss(0.5, true, 0.25, 2.0) == doctest::Approx(0.25 * 0.25 * std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(focal_loss(0.5, true, 0.25, 2.0) - 0.0433217) <= 1e-6);
  for (double p : {0.1, 0.4, 0.9}) {
    CHECK(focal_loss(p, true, 0.5, 0.0) == doctest::Approx(-0.5 * std::log(p)));
    CHECK(focal_loss(p, false, 0.5, 0.0) == doctest::Approx(-0.5 * std::log(1.0 - p)));
  }
  double prev_pos = INFINITY, prev_neg = -INFINITY;
  for (double p = 0.01; p < 1.0; p += 0.01) {
    const double pos = focal_loss(p, true, 0.25, 2.0), neg = focal_loss(p, false, 0.25, 2.0);
    CHECK(pos <= prev_pos);
    CHECK(neg >= prev_neg);
    prev_pos = pos;
    prev_neg = neg;
  }
  CHECK(std::isfinite(focal_loss(0.0, true, 0.25, 2.0)));
}

TEST_CASE("DIoU examples and range") {
  CHECK(diou_1d({2, 6}, {2, 6}) == 1.0);
  CHECK(std::abs(diou_1d({2, 6}, {4, 8}) - 2.0 / 9.0) <= 1e-12);
  CHECK(diou_1d({0, 1}, {99, 100}) == doctest::Approx(-0.9801).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(diou_1d({1, 1}, {0, 2}), "degenerate interval", ValidationError);
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const double a = r.uniform(0, 10), b = r.uniform(0, 10);
    const Segment p{a, a + r.uniform(0.1, 5)}, g{b, b + r.uniform(0.1, 5)};
    const double d = diou_1d(p, g);
    CHECK(d > -1.0);
    CHECK(d <= 1.0);
    // Shared centres leave plain IoU.
    const Segment q{g.center() - 0.5 * p.length(), g.center() + 0.5 * p.length()};
    const double inter = std::min(q.end, g.end) - std::max(q.start, g.start);
    CHECK(diou_1d(q, g) == doctest::Approx(inter / (q.length() + g.length() - inter)).epsilon(1e-12));
  }
}

TEST_CASE("total_loss examples") {
  LossConfig cfg;
  // One positive at t = 5 with p = 0.5; prediction (2, 6) against target (4, 8).
  HeadOutput out;
  Matrix logits = Matrix::Constant(8, 1, -40.0);
  logits(5, 0) = 0.0;
  Matrix offsets = Matrix::Ones(8, 2);
  offsets.row(5) << 3.0, 1.0;
  out.logits.push_back(FeatureSequence::from_items({logits}));
  out.offsets.push_back(FeatureSequence::from_items({offsets}));
  out.strides.push_back(1);
  TargetMap tm;
  LevelTargets lt;
  lt.labels.assign(8, -1);
  lt.labels[5] = 0;
  lt.distances = Matrix::Zero(8, 2);
  lt.distances.row(5) << 1.0, 3.0;
  tm.levels.push_back(lt);
  const double expected = 0.25 * 0.25 * std::log(2.0) + (1.0 - 2.0 / 9.0);
  CHECK(total_loss(out, {tm}, cfg) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(total_loss(out, {tm}, cfg) == doctest::Approx(0.8211).epsilon(1e-4));

  // Saturated-correct logits and exact offsets drive the loss to zero.
  Matrix perfect = Matrix::Constant(8, 1, -40.0);
  perfect(5, 0) = 40.0;
  Matrix exact = offsets;
  exact.row(5) << 1.0, 3.0;
  out.logits[0] = FeatureSequence::from_items({perfect});
  out.offsets[0] = FeatureSequence::from_items({exact});
  CHECK(total_loss(out, {tm}, cfg) < 1e-10);
  CHECK(total_loss(out, {tm}, cfg) >= 0.0);

  // No positives: classification only, normaliser 1.
  TargetMap empty;
  LevelTargets neg = lt;
  neg.labels.assign(8, -1);
  neg.distances.setZero();
  empty.levels.push_back(neg);
  out.logits[0] = FeatureSequence::from_items({Matrix::Zero(8, 1)});
  CHECK(total_loss(out, {empty}, cfg) == doctest::Approx(8 * focal_loss(0.5, false, 0.25, 2.0)).epsilon(1e-12));
}

TEST_CASE("total_loss is non-negative on random instances") {
  LossConfig cfg;
  const auto geo = geometry(32, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    HeadOutput out;
    for (const auto& g : geo) {
      out.logits.push_back(FeatureSequence::from_items({randn(seed * 7 + 1, g.length, 3)}));
      out.offsets.push_back(FeatureSequence::from_items({randn(seed * 7 + 2, g.length, 2).cwiseAbs()}));
      out.strides.push_back(g.stride);
    }
    const TargetMap tm = assign_targets({{{2, 9}, 0}, {{12, 30}, 2}}, geo, 1.5);
    CHECK(total_loss(out, {tm}, cfg) >= 0.0);
  }
}
