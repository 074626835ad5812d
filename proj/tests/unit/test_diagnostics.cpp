#include "helpers.hpp"

#include "fddet/diagnostics.hpp"

#include <cmath>
#include <set>

using namespace fddet;
using fddet::test::randn;

namespace {

DetectionCandidate det(const std::string& v, int label, double score, double s, double e) {
  return {v, label, score, {s, e}};
}

struct Scene {
  std::vector<GroundTruth> gts;
  std::vector<DetectionCandidate> preds;
  std::map<std::string, double> durations;
};

Scene random_scene(std::uint64_t seed) {
  Rng r(seed);
  Scene s;
  for (const char* v : {"a", "b", "c"}) {
    s.durations[v] = 200.0;
    double t = 0.0;
    for (int k = 0; k < 4; ++k) {
      t += r.uniform(1, 20);
      const double len = r.uniform(1, 25);
      s.gts.push_back({v, int(r.uniform_int(0, 2)), {t, t + len}});
      t += len;
    }
    for (int k = 0; k < 15; ++k) {
      const double st = r.uniform(0, 180);
      s.preds.push_back(det(v, int(r.uniform_int(0, 2)), r.uniform(0.01, 1.0), st, st + r.uniform(1, 25)));
    }
  }
  // Some near-copies of GTs so every category occurs.
  for (std::size_t g = 0; g < s.gts.size(); g += 2) {
    const auto& gt = s.gts[g];
    s.preds.push_back({gt.video_id, gt.label, r.uniform(0.5, 1.0), {gt.segment.start + 0.5, gt.segment.end}});
  }
  return s;
}

}  // namespace

TEST_CASE("bin edges") {
  CHECK(coverage_bin(0.05) == Bin::M);
  CHECK(coverage_bin(0.02) == Bin::XS);
  CHECK(coverage_bin(0.0200001) == Bin::S);
  CHECK(coverage_bin(0.08) == Bin::L);
  CHECK(coverage_bin(1.0) == Bin::XL);
  CHECK(length_bin(10.0) == Bin::M);
  CHECK(length_bin(3.0) == Bin::XS);
  CHECK(length_bin(18.0) == Bin::L);
  CHECK(length_bin(18.5) == Bin::XL);
  CHECK(count_bin(1) == Bin::XS);
  CHECK(count_bin(2) == Bin::S);
  CHECK(count_bin(40) == Bin::S);
  CHECK(count_bin(41) == Bin::M);
  CHECK(count_bin(81) == Bin::L);

  const auto b = bin_characteristics({{10, 20}, 0}, 200.0, 3);
  CHECK(b.coverage == Bin::M);
  CHECK(b.length == Bin::M);
  CHECK(b.count == Bin::S);
}

TEST_CASE("false-positive taxonomy examples") {
  const std::vector<GroundTruth> gts{{"v", 0, {0, 10}}, {"v", 1, {50, 60}}};
  const std::vector<DetectionCandidate> preds{
      det("v", 0, 0.9, 0, 6),      // tIoU 0.6, correct label
      det("v", 0, 0.8, 0, 9),      // same GT again
      det("v", 0, 0.7, 50, 60),    // overlaps a class-1 GT
      det("v", 0, 0.6, 7, 20),     // tIoU 0.15 with its own class
      det("v", 0, 0.5, 58, 80),    // tIoU 0.09 with another class
      det("v", 0, 0.4, 100, 110),  // no overlap
  };
  const auto cats = categorize_predictions(preds, gts, 0.5);
  REQUIRE(cats.size() == 6);
  CHECK(cats[0] == FpCategory::TruePositive);
  CHECK(cats[1] == FpCategory::DoubleDetection);
  CHECK(cats[2] == FpCategory::WrongLabel);
  CHECK(cats[3] == FpCategory::Localization);
  CHECK(cats[4] == FpCategory::Confusion);
  CHECK(cats[5] == FpCategory::Background);
}

TEST_CASE("FP counts partition the retained predictions and removal never hurts") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scene s = random_scene(seed);
    const FpReport rep = classify_fp(s.preds, s.gts, 0.5, 10);
    REQUIRE(rep.counts.size() == 10);
    for (std::size_t k = 0; k < rep.counts.size(); ++k) {
      std::size_t sum = 0;
      for (auto c : rep.counts[k]) sum += c;
      CHECK(sum == rep.retained[k]);
      if (k > 0) CHECK(rep.retained[k] >= rep.retained[k - 1]);
    }
    for (std::size_t c = 0; c < kFpCategories; ++c) CHECK(rep.removal_impact[c] >= 0.0);
    CHECK(rep.removal_impact[0] == 0.0);
  }
}

TEST_CASE("FN profile: perfect, empty, and consistency with matching") {
  const Scene s = random_scene(4);
  std::vector<DetectionCandidate> perfect;
  for (const auto& g : s.gts) perfect.push_back({g.video_id, g.label, 0.9, g.segment});
  const FnReport p = fn_profile(perfect, s.gts, s.durations, 0.5);
  CHECK(p.overall.rate() == 0.0);
  for (const auto& [c, bins] : p.bins)
    for (const auto& [b, r] : bins) CHECK(r.rate() == 0.0);

  const FnReport e = fn_profile({}, s.gts, s.durations, 0.5);
  CHECK(e.overall.rate() == 1.0);
  for (const auto& [c, bins] : e.bins)
    for (const auto& [b, r] : bins) CHECK(r.rate() == 1.0);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scene sc = random_scene(seed);
    const FnReport rep = fn_profile(sc.preds, sc.gts, sc.durations, 0.5);
    std::size_t matched = 0;
    std::set<int> labels;
    for (const auto& g : sc.gts) labels.insert(g.label);
    for (int label : labels) {
      const auto m = greedy_match(sc.preds, sc.gts, label, 0.5);
      for (std::size_t g = 0; g < sc.gts.size(); ++g) matched += m.gt_to_pred[g] >= 0 ? 1 : 0;
    }
    CHECK(rep.overall.total == sc.gts.size());
    CHECK(rep.overall.missed == sc.gts.size() - matched);
    for (Characteristic c : kCharacteristics) {
      std::size_t total = 0, missed = 0;
      for (const auto& [b, r] : rep.bins.at(c)) {
        CHECK(r.total > 0);
        total += r.total;
        missed += r.missed;
      }
      CHECK(total == rep.overall.total);
      CHECK(missed == rep.overall.missed);
    }
  }
}

TEST_CASE("sensitivity: one bin equals overall, empty bins absent, split oracle") {
  const EvalProtocol p = EvalProtocol::short_range();
  // Both GTs have length 5 s and coverage 0.05 in a 100 s video.
  const std::vector<GroundTruth> same{{"v", 0, {0, 5}}, {"v", 0, {40, 45}}};
  const std::vector<DetectionCandidate> preds{det("v", 0, 0.9, 0, 5), det("v", 0, 0.8, 70, 80)};
  const std::map<std::string, double> dur{{"v", 100.0}};
  const SensitivityReport one = sensitivity_profile(preds, same, dur, p);
  REQUIRE(one.bins.at(Characteristic::Length).size() == 1);
  CHECK(one.bins.at(Characteristic::Length).at(Bin::S).average_map == one.overall);
  CHECK(one.bins.at(Characteristic::Length).at(Bin::S).relative_change == 0.0);
  CHECK(one.bins.at(Characteristic::Length).count(Bin::XL) == 0);

  // Split by length: a 2 s GT (XS) and a 15 s GT (L).
  const std::vector<GroundTruth> two{{"v", 0, {0, 2}}, {"v", 0, {40, 55}}};
  const std::vector<DetectionCandidate> p2{det("v", 0, 0.9, 40, 55), det("v", 0, 0.8, 0, 2), det("v", 0, 0.7, 60, 70)};
  const SensitivityReport rep = sensitivity_profile(p2, two, dur, p);
  const auto& len = rep.bins.at(Characteristic::Length);
  REQUIRE(len.size() == 2);
  const double xs = evaluate_map(p2, {two[0]}, p).average;
  const double l = evaluate_map(p2, {two[1]}, p).average;
  CHECK(len.at(Bin::XS).average_map == xs);
  CHECK(len.at(Bin::L).average_map == l);
  // Hand values: XS is found at rank 2 (AP 1/2), L at rank 1 (AP 1).
  CHECK(xs == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(l == 1.0);
  CHECK(len.at(Bin::XS).relative_change == doctest::Approx((0.5 - rep.overall) / rep.overall).epsilon(1e-12));
}

TEST_CASE("adjacent cosine probes") {
  CHECK(adjacent_cosine(Matrix::Ones(6, 4)) == doctest::Approx(1.0).epsilon(1e-15));
  Matrix alt = Matrix::Zero(6, 2);
  for (Index t = 0; t < 6; ++t) alt(t, t % 2) = 1.0;
  CHECK(adjacent_cosine(alt) == 0.0);
  CHECK(std::isnan(adjacent_cosine(Matrix::Zero(4, 3))));
  Matrix with_zero = Matrix::Ones(3, 2);
  with_zero.row(1).setZero();
  CHECK(std::isnan(adjacent_cosine(with_zero)));

  ModelConfig cfg;
  cfg.seed = 2;
  ModelParams m = init_model(cfg);
  const auto sims = layer_similarity(m, FeatureSequence::from_items({randn(4, 64, 16)}));
  REQUIRE(sims.size() == 2 + 6);
  CHECK(sims[0].layer == "input");
  CHECK(sims[1].layer == "fgaad");
  CHECK(sims[2].layer == "tcar.level0");
  for (const auto& s : sims) {
    CHECK(s.value >= -1.0);
    CHECK(s.value <= 1.0);
  }
  const auto constant = layer_similarity(m, FeatureSequence::from_items({Matrix::Constant(64, 16, 0.7)}));
  CHECK(constant[0].value == doctest::Approx(1.0).epsilon(1e-15));
}
