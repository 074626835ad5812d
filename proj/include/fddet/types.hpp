// Core dense types shared by every fddet module.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fddet {

using Scalar = double;
using Index = Eigen::Index;

/// Time-major (rows = time steps, cols = channels).
template <typename T>
using SequenceT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
using Matrix = SequenceT<Scalar>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Invalid argument or violated precondition. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system or decode failure. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A batch of variable-length sequences padded to a common length.
///
/// `values[b]` is an (L x D) matrix; rows past the item's valid length are
/// zero and `mask(b, t)` is false there. Valid steps always form a prefix.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(Index batch, Index length, Index channels);

  /// Pads `items` (each Li x D) to max Li.
  static FeatureSequence from_items(const std::vector<Matrix>& items);

  Index batch() const { return static_cast<Index>(values_.size()); }
  Index length() const { return length_; }
  Index channels() const { return channels_; }

  Index valid_length(Index b) const;
  /// Valid prefix of item b.
  Matrix item(Index b) const { return values_[b].topRows(valid_length(b)); }
  std::vector<Matrix> items() const;

  Matrix& values(Index b) { return values_[b]; }
  const Matrix& values(Index b) const { return values_[b]; }
  const Mask& mask() const { return mask_; }

  /// Marks steps >= len of item b invalid and zeroes them.
  void set_valid_length(Index b, Index len);

  bool all_finite() const;

 private:
  std::vector<Matrix> values_;
  Mask mask_;
  Index length_ = 0;
  Index channels_ = 0;
};

/// Apply `fn(Matrix) -> Matrix` to each valid prefix and re-pad.
template <typename Fn>
FeatureSequence map_items(const FeatureSequence& x, Fn&& fn) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(x.batch()));
  for (Index b = 0; b < x.batch(); ++b) out.push_back(fn(x.item(b)));
  return FeatureSequence::from_items(out);
}

/// Half-open-agnostic interval [start, end] with start < end.
struct Segment {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
  double center() const { return 0.5 * (start + end); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// (start, end, label) on some time axis.
struct ActionInstance {
  Segment segment;
  int label = 0;
  friend bool operator==(const ActionInstance&, const ActionInstance&) = default;
};

}  // namespace fddet
