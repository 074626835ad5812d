#include "helpers.hpp"

#include "fddet/grad_suites.hpp"
#include "fddet/gradcheck.hpp"

#include <cmath>

using namespace fddet;
using fddet::test::randn;

namespace {

struct Two {
  Parameter a{"a", Matrix::Zero(1, 2)};
  Parameter b{"b", Matrix::Zero(2, 2)};
  template <typename F>
  void for_each_param(F&& f) {
    f(a);
    f(b);
  }
};

struct None {
  template <typename F>
  void for_each_param(F&&) {}
};

}  // namespace

TEST_CASE("zero_grads clears, is idempotent, and accepts an empty set") {
  Two p;
  p.a.grad << 1, 2;
  p.b.grad.setConstant(3.0);
  zero_grads(p);
  CHECK(p.a.grad.isZero(0.0));
  CHECK(p.b.grad.isZero(0.0));
  zero_grads(p);
  CHECK(p.a.grad.isZero(0.0));

  None none;
  zero_grads(none);
}

TEST_CASE("draw_normal: degenerate std, determinism, law of large numbers") {
  Rng a(3);
  CHECK(draw_normal(a, 4, 3, 2.5, 0.0).isApproxToConstant(2.5, 0.0));

  Rng r1(11), r2(11);
  CHECK(draw_normal(r1, 5, 7, 0.0, 1.0) == draw_normal(r2, 5, 7, 0.0, 1.0));

  Rng big(7);
  const Matrix m = draw_normal(big, 500000, 2, 0.0, 1.0);
  CHECK(std::abs(m.mean()) < 0.01);
  CHECK(std::abs((m.array().square().mean()) - 1.0) < 0.01);
}

TEST_CASE("rng streams: fork is independent and does not advance the parent") {
  Rng r(5);
  const std::uint64_t before = r.counter();
  Rng f = r.fork(1);
  CHECK(r.counter() == before);
  CHECK(f.next_u64() != Rng(5).next_u64());
  Rng u(9);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
    const auto k = u.uniform_int(-2, 3);
    CHECK((k >= -2 && k <= 3));
  }
}

TEST_CASE("check_gradient: exact on linear and quadratic ops") {
  const Matrix x = randn(1, 6, 3);
  GradOp linear = [](Tape&, const std::vector<Var>& xs) { return ops::sum(ops::scale(xs[0], 3.0)); };
  CHECK(check_gradient(linear, FeatureSequence::from_items({x})) <= 1e-10);

  GradOp quad = [](Tape&, const std::vector<Var>& xs) { return ops::sum(ops::square(xs[0])); };
  const auto report = check_gradient_report(quad, FeatureSequence::from_items({Matrix::Constant(1, 1, 2.0)}), {}, 1e-5);
  CHECK(report.worst_analytic == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(report.worst_numeric == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(report.max_relative_error <= 1e-9);
}

TEST_CASE("check_gradient: parameters are perturbed and non-finite adjoints rejected") {
  Parameter w("w", randn(2, 3, 2));
  std::vector<Parameter*> params{&w};
  GradOp op = [&](Tape& t, const std::vector<Var>& xs) { return ops::sum(ops::gelu(ops::matmul(xs[0], t.param(w)))); };
  const auto report = check_gradient_report(op, FeatureSequence::from_items({randn(3, 5, 3)}), params);
  CHECK(report.entries_checked == 15 + 6);
  CHECK(report.max_relative_error <= 1e-6);

  GradOp bad = [](Tape& t, const std::vector<Var>& xs) {
    const Var x = xs[0];
    return ops::sum(t.record(x.value(), true, [id = x.id](Tape& tp, const Matrix& g, const Matrix&) {
      tp.accumulate(id, Matrix::Constant(g.rows(), g.cols(), std::nan("")));
    }));
  };
  CHECK_THROWS_WITH_AS(check_gradient(bad, FeatureSequence::from_items({randn(4, 2, 2)})), "gradient not finite",
                       ValidationError);
}

TEST_CASE("FeatureSequence: padding, masks, and masked reductions") {
  const Matrix a = randn(5, 4, 2), b = randn(6, 7, 2);
  const auto x = FeatureSequence::from_items({a, b});
  CHECK(x.batch() == 2);
  CHECK(x.length() == 7);
  CHECK(x.valid_length(0) == 4);
  CHECK(x.values(0).bottomRows(3).isZero(0.0));
  CHECK_FALSE(x.mask()(0, 4));
  CHECK(x.mask()(1, 6));
  CHECK(x.item(0) == a);
  // Reductions over a padded item equal reductions over its valid prefix.
  const Matrix pooled = fddet::test::eval(x.item(0), [](Var v) { return ops::mean_rows(v); });
  CHECK((pooled - a.colwise().mean()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("every gradient suite passes at 1e-4") {
  for (const auto& r : run_gradient_suites(1)) {
    CAPTURE(r.name);
    CAPTURE(r.report.worst_entry);
    CHECK(r.report.max_relative_error <= 1e-4);
    CHECK(r.passed);
  }
}
