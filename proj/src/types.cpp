#include "fddet/types.hpp"

#include <algorithm>

namespace fddet {

FeatureSequence::FeatureSequence(Index batch, Index length, Index channels)
    : mask_(Mask::Constant(batch, length, true)), length_(length), channels_(channels) {
  if (length < 1 || channels < 1) throw ValidationError("FeatureSequence needs L >= 1 and D >= 1");
  values_.assign(static_cast<std::size_t>(batch), Matrix::Zero(length, channels));
}

FeatureSequence FeatureSequence::from_items(const std::vector<Matrix>& items) {
  if (items.empty()) throw ValidationError("empty batch");
  Index max_len = 0;
  const Index d = items.front().cols();
  for (const auto& m : items) {
    if (m.cols() != d) throw ValidationError("channel mismatch within batch");
    max_len = std::max(max_len, m.rows());
  }
  FeatureSequence out(static_cast<Index>(items.size()), max_len, d);
  for (Index b = 0; b < out.batch(); ++b) {
    const auto& m = items[static_cast<std::size_t>(b)];
    out.values_[b].topRows(m.rows()) = m;
    out.set_valid_length(b, m.rows());
  }
  return out;
}

Index FeatureSequence::valid_length(Index b) const { return mask_.row(b).count(); }

std::vector<Matrix> FeatureSequence::items() const {
  std::vector<Matrix> out;
  for (Index b = 0; b < batch(); ++b) out.push_back(item(b));
  return out;
}

void FeatureSequence::set_valid_length(Index b, Index len) {
  if (len < 1 || len > length_) throw ValidationError("valid length out of range");
  mask_.row(b).setConstant(false);
  mask_.row(b).head(len).setConstant(true);
  values_[b].bottomRows(length_ - len).setZero();
}

bool FeatureSequence::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const Matrix& m) { return m.allFinite(); });
}

}  // namespace fddet
