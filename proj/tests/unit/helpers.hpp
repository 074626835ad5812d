#pragma once

#include "fddet/autodiff.hpp"
#include "fddet/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <string>

namespace fddet::test {

inline Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

inline Matrix randn(std::uint64_t seed, Index rows, Index cols) {
  Rng r(seed);
  return draw_normal(r, rows, cols, 0.0, 1.0);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Evaluates a Var-level function on a constant input.
inline Matrix eval(const Matrix& x, const std::function<Var(Var)>& f) {
  Tape t;
  return f(t.constant(x)).value();
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("fddet_test_" + name);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

}  // namespace fddet::test
