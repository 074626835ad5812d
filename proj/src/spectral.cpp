#include "fddet/spectral.hpp"

#include <map>
#include <mutex>

namespace fddet {

std::shared_ptr<const Matrix> low_pass_operator(Index len, Index cutoff) {
  if (len < 1 || cutoff < 1) throw ValidationError("low_pass_operator: need L >= 1 and c >= 1");
  static std::mutex mutex;
  static std::map<std::pair<Index, Index>, std::shared_ptr<const Matrix>> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find({len, cutoff}); it != cache.end()) return it->second;
  if (cache.size() >= 512) cache.clear();
  {
    // P[n][m] = (1/L) sum_{k in K} cos(2 pi k (n - m) / L); depends on (n - m) mod L only.
    Vector kernel = Vector::Zero(len);
    for (Index j = 0; j < len; ++j) {
      for (Index k = 0; k < len; ++k) {
        if (!retained_bin(k, len, cutoff)) continue;
        kernel(j) += std::cos(2.0 * std::numbers::pi * static_cast<double>((k * j) % len) / static_cast<double>(len));
      }
    }
    kernel /= static_cast<double>(len);
    auto p = std::make_shared<Matrix>(len, len);
    for (Index n = 0; n < len; ++n)
      for (Index m = 0; m < len; ++m) (*p)(n, m) = kernel(((n - m) % len + len) % len);
    cache.emplace(std::pair{len, cutoff}, p);
    return p;
  }
}

Spectrum dft(const FeatureSequence& x) {
  Spectrum s;
  for (Index b = 0; b < x.batch(); ++b) s.coeffs.push_back(dft(x.item(b)));
  return s;
}

FeatureSequence idft(const Spectrum& s) {
  std::vector<Matrix> items;
  for (const auto& c : s.coeffs) items.push_back(idft(c));
  return FeatureSequence::from_items(items);
}

FeatureSequence low_pass(const FeatureSequence& x, Index cutoff) {
  return map_items(x, [cutoff](const Matrix& m) { return low_pass(m, cutoff); });
}

}  // namespace fddet
