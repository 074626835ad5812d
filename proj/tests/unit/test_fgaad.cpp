#include "helpers.hpp"

#include "fddet/fgaad.hpp"
#include "fddet/spectral.hpp"

#include <cmath>

using namespace fddet;
using fddet::test::col;
using fddet::test::eval;
using fddet::test::max_abs;
using fddet::test::randn;

namespace {

GfdParams gfd(double beta, Index cutoff) { return {Parameter("beta", Matrix::Constant(1, 1, beta)), cutoff}; }

LhfeParams lhfe(Matrix w, int window) { return {Parameter("w", std::move(w)), window}; }

double gelu_ref(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("gfd examples") {
  const Matrix x = col({1, 2, 3, 4});
  auto p1 = gfd(1.0, 1);
  CHECK(eval(x, [&](Var v) { return gfd_forward(v, p1); }) == x);
  auto p0 = gfd(0.0, 1);
  CHECK(max_abs(eval(x, [&](Var v) { return gfd_forward(v, p0); }) - col({2.5, 2.5, 2.5, 2.5})) < 1e-14);
  auto ph = gfd(0.5, 1);
  CHECK(max_abs(eval(x, [&](Var v) { return gfd_forward(v, ph); }) - col({2.125, 2.375, 2.625, 2.875})) < 1e-14);
}

TEST_CASE("gfd identities over random inputs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng r(seed);
    const Index len = r.uniform_int(2, 64);
    const Matrix x = draw_normal(r, len, 3, 0.0, 1.0);
    for (Index c : {1, 3, 7, 40}) {
      auto one = gfd(1.0, c);
      CHECK(max_abs(eval(x, [&](Var v) { return gfd_forward(v, one); }) - x) <= 1e-12);
      auto zero = gfd(0.0, c);
      CHECK(max_abs(eval(x, [&](Var v) { return gfd_forward(v, zero); }) - low_pass(x, c)) <= 1e-9);
    }
    const Matrix mean = x.colwise().mean().replicate(len, 1);
    CHECK(max_abs(low_pass(x, 1) - mean) <= 1e-9);
  }
}

TEST_CASE("lhfe examples") {
  auto p = lhfe(Matrix::Constant(1, 1, 1.0), 2);
  const Matrix out = eval(col({1, 3}), [&](Var v) { return lhfe_forward(v, p); });
  CHECK(out(0, 0) == doctest::Approx(1.0 + gelu_ref(-1.0)).epsilon(1e-12));
  CHECK(out(0, 0) == doctest::Approx(0.84135).epsilon(1e-5));
  CHECK(out(1, 0) == doctest::Approx(3.0).epsilon(1e-15));

  // Constant input and p = 1 are fixed points for any kernel.
  auto q = lhfe(randn(3, 3, 4), 3);
  const Matrix c = Matrix::Constant(9, 4, 1.7);
  CHECK(max_abs(eval(c, [&](Var v) { return lhfe_forward(v, q); }) - c) < 1e-15);
  auto p1 = lhfe(randn(4, 5, 4), 1);
  const Matrix x = randn(5, 12, 4);
  CHECK(max_abs(eval(x, [&](Var v) { return lhfe_forward(v, p1); }) - x) < 1e-15);
}

TEST_CASE("lhfe matches a direct evaluation with centred replicate-padded convolution") {
  const Matrix x = randn(6, 10, 2);
  const Matrix w = randn(7, 3, 2);
  auto p = lhfe(w, 3);
  const Matrix out = eval(x, [&](Var v) { return lhfe_forward(v, p); });
  const Index len = x.rows();
  auto at = [&](Index t) { return std::clamp<Index>(t, 0, len - 1); };
  Matrix dev(len, 2);
  for (Index t = 0; t < len; ++t) dev.row(t) = x.row(t) - (x.row(at(t)) + x.row(at(t + 1)) + x.row(at(t + 2))) / 3.0;
  for (Index t = 0; t < len; ++t)
    for (Index d = 0; d < 2; ++d) {
      double conv = 0.0;
      for (Index j = 0; j < 3; ++j) conv += w(j, d) * dev(at(t + j - 1), d);
      CHECK(out(t, d) == doctest::Approx(gelu_ref(conv) + x(t, d)).epsilon(1e-12));
    }
}

TEST_CASE("fgaad preserves shape and handles constant input") {
  FgaadConfig cfg;
  Rng r(2);
  auto p = make_fgaad_params(8, cfg, r);
  const auto x = FeatureSequence::from_items({randn(1, 32, 8), randn(2, 32, 8)});
  const auto y = fgaad_forward(x, p);
  CHECK(y.batch() == 2);
  CHECK(y.length() == 32);
  CHECK(y.channels() == 8);
  CHECK(y.all_finite());

  const auto c = FeatureSequence::from_items({Matrix::Constant(16, 8, 3.0)});
  const auto yc = fgaad_forward(c, p);
  CHECK(yc.all_finite());
  // Zero variance rows normalise to the bias.
  CHECK(max_abs(yc.item(0).rowwise() - p.ln_bias.value.row(0)) < 1e-9);
}

TEST_CASE("decouple splits exactly and fuses with beta squared") {
  const Matrix x = randn(9, 20, 3);
  const Decoupled d = decouple(x, 4, 0.7);
  CHECK(max_abs(d.low - low_pass(x, 4)) < 1e-15);
  CHECK(max_abs(d.low + d.high - x) < 1e-12);
  CHECK(max_abs(d.fused - (d.low + 0.49 * d.high)) < 1e-12);
}
