#pragma once

#include "fddet/autodiff.hpp"

#include <functional>
#include <span>

namespace fddet {

/// Builds a graph from one input Var per batch item (valid prefix only).
using GradOp = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_entry;  // "input[b](t,d)" or "<param>(r,c)"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares the tape's adjoint of sum(op(x)) against central differences.
///
/// Relative error per entry is |a - n| / max(|a|, |n|, 1e-8). Every entry of
/// every input item and every trainable parameter in `params` is perturbed.
/// Throws ValidationError("gradient not finite") on a non-finite adjoint.
GradCheckReport check_gradient_report(const GradOp& op, const FeatureSequence& input,
                                      std::span<Parameter* const> params, double eps = 1e-5);

inline double check_gradient(const GradOp& op, const FeatureSequence& input, std::span<Parameter* const> params,
                             double eps = 1e-5) {
  return check_gradient_report(op, input, params, eps).max_relative_error;
}

inline double check_gradient(const GradOp& op, const FeatureSequence& input, double eps = 1e-5) {
  return check_gradient_report(op, input, {}, eps).max_relative_error;
}

}  // namespace fddet
