#include "helpers.hpp"

#include "fddet/model.hpp"

#include <map>

using namespace fddet;
using fddet::test::randn;

namespace {

std::map<std::string, Matrix> named_values(ModelParams& p) {
  std::map<std::string, Matrix> out;
  p.for_each_param([&](Parameter& q) { out[q.name] = q.value; });
  return out;
}

}  // namespace

TEST_CASE("forward shapes for the default configuration") {
  ModelConfig cfg;
  ModelParams p = init_model(cfg);
  const HeadOutput out = model_forward(FeatureSequence::from_items({randn(1, 256, 16)}), p);
  REQUIRE(out.logits.size() == 6);
  REQUIRE(out.offsets.size() == 6);
  for (std::size_t l = 0; l < 6; ++l) {
    CHECK(out.logits[l].length() == (256 >> l));
    CHECK(out.logits[l].channels() == 3);
    CHECK(out.offsets[l].channels() == 2);
    CHECK(out.strides[l] == (Index{1} << l));
  }
}

TEST_CASE("forward is a pure function of input and parameters") {
  ModelParams p = init_model(ModelConfig{});
  const auto x = FeatureSequence::from_items({randn(2, 64, 16)});
  const HeadOutput a = model_forward(x, p);
  const HeadOutput b = model_forward(x, p);
  for (std::size_t l = 0; l < a.logits.size(); ++l) {
    CHECK(a.logits[l].values(0) == b.logits[l].values(0));
    CHECK(a.offsets[l].values(0) == b.offsets[l].values(0));
  }
}

TEST_CASE("toggling the enhancer changes only the enhancer stage") {
  ModelConfig on;
  on.seed = 4;
  ModelConfig off = on;
  off.use_fgaad = false;
  ModelParams a = init_model(on), b = init_model(off);
  const auto va = named_values(a), vb = named_values(b);
  std::size_t shared = 0;
  for (const auto& [name, value] : vb) {
    REQUIRE(va.count(name) == 1);
    CHECK(va.at(name) == value);
    ++shared;
  }
  CHECK(va.size() > shared);

  // Bypassed enhancer: the input reaches the pyramid unchanged.
  const Matrix x = randn(3, 64, 16);
  Tape t;
  const ForwardTrace tr = trace_forward(t.constant(x), b);
  CHECK(tr.enhanced.value() == x);

  // Plain blocks in place of relation blocks keep every shape.
  ModelConfig plain = on;
  plain.pyramid.plain_blocks = true;
  ModelParams c = init_model(plain);
  const HeadOutput out = model_forward(FeatureSequence::from_items({x}), c);
  CHECK(out.logits.size() == 6);
  CHECK(out.logits[5].length() == 2);
}

TEST_CASE("width mismatch is rejected") {
  ModelParams p = init_model(ModelConfig{});
  CHECK_THROWS_AS(model_forward(FeatureSequence::from_items({randn(1, 64, 8)}), p), ValidationError);
}

TEST_CASE("inference: zero heads bound scores, duplicates agree, seconds conversion") {
  ModelParams p = init_model(ModelConfig{});
  p.head.cls_out_w.value.setZero();
  p.head.cls_out_b.value.setZero();
  const Matrix v = randn(5, 128, 16);
  EvalProtocol prot = EvalProtocol::long_range();
  const auto c = infer(FeatureSequence::from_items({v, v}), p, {"a", "b"}, {4.0, 4.0}, prot);
  REQUIRE_FALSE(c.empty());
  std::vector<DetectionCandidate> a, b;
  for (const auto& d : c) {
    CHECK(d.score <= 0.5);
    CHECK(d.segment.end <= 128.0 / 4.0);
    (d.video_id == "a" ? a : b).push_back(d);
  }
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].score == b[i].score);
    CHECK(a[i].segment == b[i].segment);
    CHECK(a[i].label == b[i].label);
  }
  CHECK_THROWS_AS(infer(FeatureSequence::from_items({v}), p, {"a", "b"}, {4.0}, prot), ValidationError);
}

TEST_CASE("level geometry follows the pyramid") {
  PyramidConfig cfg;
  const auto geo = level_geometry(100, cfg);
  REQUIRE(geo.size() == 6);
  CHECK(geo[0].length == 100);
  CHECK(geo[5].length == 4);
  CHECK(geo[5].stride == 32);
}
