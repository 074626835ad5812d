// Central-difference checks over every differentiable op and the full model.
#pragma once

#include "fddet/gradcheck.hpp"

namespace fddet {

struct GradSuiteResult {
  std::string name;
  std::string shape;  // "BxLxD" of the checked input
  GradCheckReport report;
  bool passed = false;
};

std::vector<std::string> gradient_suite_names();

/// Runs the named suites (all when `only` is empty). Inputs are drawn from
/// `seed`; every input is at most 1x32x8.
std::vector<GradSuiteResult> run_gradient_suites(std::uint64_t seed = 1, double tolerance = 1e-4,
                                                 const std::vector<std::string>& only = {});

}  // namespace fddet
