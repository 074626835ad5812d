#include "helpers.hpp"

#include "fddet/spectral.hpp"

#include <complex>

using namespace fddet;
using fddet::test::col;
using fddet::test::max_abs;
using fddet::test::randn;
using cd = std::complex<double>;

namespace {

double spectrum_error(const ComplexSequence& s, std::initializer_list<cd> expected) {
  double worst = 0.0;
  Index k = 0;
  for (cd e : expected) worst = std::max(worst, std::abs(s(k++, 0) - e));
  return worst;
}

// Naive O(L^2) transform written independently of the library.
ComplexSequence naive_dft(const Matrix& x) {
  const Index n = x.rows();
  ComplexSequence out(n, x.cols());
  for (Index d = 0; d < x.cols(); ++d)
    for (Index k = 0; k < n; ++k) {
      cd acc = 0;
      for (Index t = 0; t < n; ++t) acc += x(t, d) * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t) / double(n));
      out(k, d) = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("dft: impulse, constant, and the hand-evaluated L=4 spectrum") {
  CHECK(spectrum_error(dft(col({1, 0, 0, 0})), {1, 1, 1, 1}) < 1e-15);
  CHECK(spectrum_error(dft(col({1, 1, 1, 1})), {4, 0, 0, 0}) < 1e-15);
  CHECK(spectrum_error(dft(col({0, 1, 0, -1})), {0, cd(0, -2), 0, cd(0, 2)}) < 1e-15);
  CHECK_THROWS_AS(dft(Matrix(0, 1)), ValidationError);
}

TEST_CASE("dft agrees with a naive transform and is Hermitian for real input") {
  for (Index len : {1, 2, 3, 7, 16, 31}) {
    const Matrix x = randn(static_cast<std::uint64_t>(len), len, 3);
    const ComplexSequence s = dft(x);
    CHECK((s - naive_dft(x)).cwiseAbs().maxCoeff() < 1e-10 * double(len));
    CHECK(hermitian_defect(s) < 1e-12);
  }
}

TEST_CASE("idft: examples, round trip, and rejection of non-real spectra") {
  ComplexSequence c(4, 1);
  c << 4, 0, 0, 0;
  CHECK(max_abs(idft(c) - col({1, 1, 1, 1})) < 1e-15);
  c << 0, cd(0, -2), 0, cd(0, 2);
  CHECK(max_abs(idft(c) - col({0, 1, 0, -1})) < 1e-15);

  const Matrix x = randn(4, 64, 3);
  CHECK(max_abs(idft(dft(x)) - x) <= 1e-9);

  c << 0, cd(0, 1), 0, 0;
  CHECK_THROWS_WITH_AS(idft(c), "non-real reconstruction", ValidationError);
}

TEST_CASE("low_pass examples") {
  CHECK(max_abs(low_pass(col({1, 2, 3, 4}), 1) - col({2.5, 2.5, 2.5, 2.5})) < 1e-14);
  CHECK(max_abs(low_pass(col({1, 2, 3, 4}), 3) - col({1, 2, 3, 4})) < 1e-14);
  CHECK(max_abs(low_pass(col({0, 1, 0, -1}), 1)) < 1e-15);
  CHECK_THROWS_AS(low_pass(col({1, 2}), 0), ValidationError);
}

TEST_CASE("low_pass properties: idempotent, exact split, Parseval, monotone energy") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    const Index len = r.uniform_int(3, 80);
    const Matrix x = draw_normal(r, len, 2, 0.0, 1.0);
    const Index c = r.uniform_int(1, 10);
    const Matrix lp = low_pass(x, c);
    CHECK(max_abs(low_pass(lp, c) - lp) <= 1e-9);
    CHECK(max_abs(lp + (x - lp) - x) <= 1e-12);

    const double energy = x.squaredNorm();
    const double spectral = dft(x).cwiseAbs2().sum() / static_cast<double>(len);
    CHECK(std::abs(energy - spectral) / energy <= 1e-8);

    double previous = -1.0;
    for (Index cc = 1; cc <= len / 2 + 1; ++cc) {
      const Matrix l = low_pass(x, cc);
      const double var = (l.rowwise() - l.colwise().mean()).squaredNorm();
      CHECK(var >= previous - 1e-9);
      previous = var;
    }
  }
}

TEST_CASE("low_pass_operator reproduces the spectral projection") {
  const Matrix x = randn(8, 21, 3);
  for (Index c : {1, 4, 11}) CHECK(max_abs(*low_pass_operator(21, c) * x - low_pass(x, c)) < 1e-12);
}

TEST_CASE("batched transforms use each item's own length") {
  const Matrix a = randn(1, 10, 2), b = randn(2, 16, 2);
  const auto x = FeatureSequence::from_items({a, b});
  const Spectrum s = dft(x);
  CHECK(s.origin_length(0) == 10);
  CHECK(s.origin_length(1) == 16);
  const FeatureSequence lp = low_pass(x, 2);
  CHECK(max_abs(lp.item(0) - low_pass(a, 2)) < 1e-15);
  CHECK(lp.values(0).bottomRows(6).isZero(0.0));
  CHECK(max_abs(idft(s).item(1) - b) < 1e-12);
}
