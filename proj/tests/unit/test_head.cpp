#include "helpers.hpp"

#include "fddet/head.hpp"

#include <cmath>
#include <set>
#include <tuple>

using namespace fddet;
using fddet::test::max_abs;
using fddet::test::randn;

namespace {

std::vector<PyramidLevel> levels_of(std::initializer_list<Index> lengths, Index channels) {
  std::vector<PyramidLevel> out;
  Index stride = 1;
  std::uint64_t seed = 1;
  for (Index len : lengths) {
    out.push_back({FeatureSequence::from_items({randn(seed++, len, channels)}), stride, {}});
    stride *= 2;
  }
  return out;
}

}  // namespace

TEST_CASE("head output shapes are per level and shared across levels") {
  Rng r(1);
  HeadParams p = make_head_params(4, 2, HeadConfig{}, r);
  const HeadOutput out = head_forward(levels_of({8, 4}, 4), p);
  REQUIRE(out.logits.size() == 2);
  CHECK(out.logits[0].batch() == 1);
  CHECK(out.logits[0].length() == 8);
  CHECK(out.logits[0].channels() == 2);
  CHECK(out.offsets[0].channels() == 2);
  CHECK(out.logits[1].length() == 4);
  CHECK(out.offsets[1].length() == 4);
  CHECK(out.strides == std::vector<Index>{1, 2});
}

TEST_CASE("zero regression projection gives softplus(0) offsets") {
  Rng r(2);
  HeadParams p = make_head_params(4, 3, HeadConfig{}, r);
  p.reg_out_w.value.setZero();
  p.reg_out_b.value.setZero();
  const HeadOutput out = head_forward(levels_of({8}, 4), p);
  CHECK(max_abs(out.offsets[0].item(0).array() - std::log(2.0)) < 1e-15);
  CHECK(std::log(2.0) == doctest::Approx(0.6931).epsilon(1e-4));
}

TEST_CASE("prior bias sets the initial foreground probability") {
  Rng r(3);
  HeadConfig cfg;
  cfg.prior_prob = 0.01;
  HeadParams p = make_head_params(4, 3, cfg, r);
  CHECK(sigmoid(p.cls_out_b.value(0, 0)) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("decode examples") {
  DecodeConfig cfg;
  Matrix logits = Matrix::Constant(6, 1, -50.0);
  Matrix offsets = Matrix::Zero(6, 2);
  logits(5, 0) = 2.0;
  offsets.row(5) << 1.5, 2.0;
  const auto c = decode_candidates({logits}, {offsets}, {4}, 100.0, "v", cfg);
  REQUIRE(c.size() == 1);
  CHECK(c[0].segment == Segment{14.0, 28.0});
  CHECK(c[0].score == doctest::Approx(sigmoid(2.0)));

  // Zero offsets give zero-length segments, which are dropped.
  logits.setConstant(3.0);
  offsets.setZero();
  CHECK(decode_candidates({logits}, {offsets}, {4}, 100.0, "v", cfg).empty());

  logits.setConstant(-20.0);
  offsets.setOnes();
  CHECK(decode_candidates({logits}, {offsets}, {4}, 100.0, "v", cfg).empty());
}

TEST_CASE("decode: clamping, top-k, class permutation and stride scaling") {
  DecodeConfig cfg;
  cfg.pre_nms_topk = 1000;
  const Matrix logits = randn(1, 16, 3);
  const Matrix offsets = randn(2, 16, 2).cwiseAbs() * 3.0;
  const double true_len = 13.5;
  const auto c = decode_candidates({logits}, {offsets}, {1}, true_len, "v", cfg);
  for (const auto& d : c) {
    CHECK(d.segment.start >= 0.0);
    CHECK(d.segment.start < d.segment.end);
    CHECK(d.segment.end <= true_len);
    CHECK(d.score >= cfg.score_floor);
    CHECK(d.score <= 1.0);
  }

  const int perm[] = {2, 0, 1};
  Matrix permuted(logits.rows(), 3);
  for (int c = 0; c < 3; ++c) permuted.col(perm[c]) = logits.col(c);
  const auto cp = decode_candidates({permuted}, {offsets}, {1}, true_len, "v", cfg);
  REQUIRE(cp.size() == c.size());
  std::multiset<std::tuple<double, double, double, int>> a, b;
  for (const auto& d : c) a.insert({d.score, d.segment.start, d.segment.end, perm[d.label]});
  for (const auto& d : cp) b.insert({d.score, d.segment.start, d.segment.end, d.label});
  CHECK(a == b);

  const auto s1 = decode_candidates({logits}, {offsets}, {1}, 1e9, "v", cfg);
  const auto s4 = decode_candidates({logits}, {offsets}, {4}, 1e9, "v", cfg);
  REQUIRE(s1.size() == s4.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s4[i].segment.start == doctest::Approx(4.0 * s1[i].segment.start));
    CHECK(s4[i].segment.end == doctest::Approx(4.0 * s1[i].segment.end));
  }

  cfg.pre_nms_topk = 5;
  const auto top = decode_candidates({logits}, {offsets}, {1}, 1e9, "v", cfg);
  REQUIRE(top.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(top[i].score == s1[i].score);
}
