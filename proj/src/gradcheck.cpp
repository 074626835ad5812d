#include "fddet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fddet {
namespace {

double evaluate(const GradOp& op, const std::vector<Matrix>& items) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& m : items) vars.push_back(tape.constant(m));
  return op(tape, vars).value().sum();
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

std::string label(const std::string& base, Index r, Index c) {
  std::ostringstream os;
  os << base << '(' << r << ',' << c << ')';
  return os.str();
}

}  // namespace

GradCheckReport check_gradient_report(const GradOp& op, const FeatureSequence& input,
                                      std::span<Parameter* const> params, double eps) {
  if (eps <= 0.0) throw ValidationError("check_gradient: eps must be > 0");
  std::vector<Matrix> items = input.items();

  for (Parameter* p : params) p->zero_grad();
  std::vector<Matrix> input_grads;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& m : items) vars.push_back(tape.input(m));
    Var loss = ops::sum(op(tape, vars));
    tape.backward(loss);
    for (const auto& v : vars) input_grads.push_back(tape.grad(v));
  }
  for (const auto& g : input_grads)
    if (!g.allFinite()) throw ValidationError("gradient not finite");
  for (Parameter* p : params)
    if (!p->grad.allFinite()) throw ValidationError("gradient not finite");

  GradCheckReport report;
  auto consider = [&](double analytic, double numeric, const std::string& where) {
    const double err = relative_error(analytic, numeric);
    ++report.entries_checked;
    if (report.worst_entry.empty() || err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_entry = where;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  };

  for (std::size_t b = 0; b < items.size(); ++b) {
    Matrix& m = items[b];
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) {
        const double saved = m(r, c);
        m(r, c) = saved + eps;
        const double up = evaluate(op, items);
        m(r, c) = saved - eps;
        const double down = evaluate(op, items);
        m(r, c) = saved;
        consider(input_grads[b](r, c), (up - down) / (2.0 * eps), label("input[" + std::to_string(b) + "]", r, c));
      }
    }
  }

  for (Parameter* p : params) {
    if (!p->trainable) continue;
    const Matrix analytic = p->grad;
    for (Index r = 0; r < p->value.rows(); ++r) {
      for (Index c = 0; c < p->value.cols(); ++c) {
        const double saved = p->value(r, c);
        p->value(r, c) = saved + eps;
        const double up = evaluate(op, items);
        p->value(r, c) = saved - eps;
        const double down = evaluate(op, items);
        p->value(r, c) = saved;
        consider(analytic(r, c), (up - down) / (2.0 * eps), label(p->name, r, c));
      }
    }
  }
  return report;
}

}  // namespace fddet
