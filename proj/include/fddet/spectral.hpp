// Temporal DFT, inverse DFT and the Hermitian-symmetric low-pass projection.
//
// Transforms run along rows (time) independently per column (channel), at
// each sequence's own length.
#pragma once

#include "fddet/types.hpp"

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

namespace fddet {

template <typename T>
using ComplexSequenceT = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
using ComplexSequence = ComplexSequenceT<Scalar>;

/// Per-item spectra of a FeatureSequence; coeffs[b] is (L_b x D), row k = bin k.
struct Spectrum {
  std::vector<ComplexSequence> coeffs;

  Index batch() const { return static_cast<Index>(coeffs.size()); }
  Index origin_length(Index b) const { return coeffs[static_cast<std::size_t>(b)].rows(); }
};

namespace detail {

/// e^{sign * i 2 pi j / L} for j = 0..L-1, evaluated directly per index.
template <typename T>
std::vector<std::complex<T>> twiddles(Index len, int sign) {
  std::vector<std::complex<T>> tw(static_cast<std::size_t>(len));
  for (Index j = 0; j < len; ++j) {
    const T angle = static_cast<T>(sign) * T(2) * std::numbers::pi_v<T> * static_cast<T>(j) / static_cast<T>(len);
    tw[static_cast<std::size_t>(j)] = {std::cos(angle), std::sin(angle)};
  }
  return tw;
}

}  // namespace detail

/// s[k] = sum_n x[n] e^{-i 2 pi k n / L}.
template <typename Derived>
ComplexSequenceT<typename Derived::Scalar> dft(const Eigen::MatrixBase<Derived>& x) {
  using T = typename Derived::Scalar;
  const Index len = x.rows();
  if (len < 1) throw ValidationError("dft: sequence must have L >= 1");
  const auto tw = detail::twiddles<T>(len, -1);
  const ComplexSequenceT<T> xc = x.template cast<std::complex<T>>();
  ComplexSequenceT<T> out = ComplexSequenceT<T>::Zero(len, x.cols());
  for (Index k = 0; k < len; ++k)
    for (Index n = 0; n < len; ++n) out.row(k) += tw[static_cast<std::size_t>((k * n) % len)] * xc.row(n);
  return out;
}

/// Largest |s[k] - conj(s[L-k])|, relative to the largest coefficient.
template <typename T>
T hermitian_defect(const ComplexSequenceT<T>& s) {
  const Index len = s.rows();
  T worst = 0, scale = 0;
  for (Index k = 0; k < len; ++k) {
    const Index mirror = (len - k) % len;
    for (Index d = 0; d < s.cols(); ++d) {
      worst = std::max(worst, std::abs(s(k, d) - std::conj(s(mirror, d))));
      scale = std::max(scale, std::abs(s(k, d)));
    }
  }
  return scale > 0 ? worst / scale : T(0);
}

/// x[n] = (1/L) sum_k s[k] e^{+i 2 pi k n / L}. Rejects spectra that would
/// reconstruct a complex signal.
template <typename T>
SequenceT<T> idft(const ComplexSequenceT<T>& s) {
  const Index len = s.rows();
  if (len < 1) throw ValidationError("idft: spectrum must have L >= 1");
  const T tol = std::is_same_v<T, float> ? T(1e-4) : T(1e-9);
  if (hermitian_defect(s) > tol) throw ValidationError("non-real reconstruction");
  const auto tw = detail::twiddles<T>(len, +1);
  ComplexSequenceT<T> out = ComplexSequenceT<T>::Zero(len, s.cols());
  for (Index n = 0; n < len; ++n)
    for (Index k = 0; k < len; ++k) out.row(n) += tw[static_cast<std::size_t>((k * n) % len)] * s.row(k);
  return out.real() / static_cast<T>(len);
}

/// Bin k is kept iff k < c or k > L - c (the Hermitian mirror of the first c bins).
constexpr bool retained_bin(Index k, Index len, Index cutoff) { return k < cutoff || k > len - cutoff; }

template <typename T>
void apply_low_pass(ComplexSequenceT<T>& s, Index cutoff) {
  for (Index k = 0; k < s.rows(); ++k)
    if (!retained_bin(k, s.rows(), cutoff)) s.row(k).setZero();
}

/// L(x): keep the retained bins, zero the rest, transform back.
template <typename Derived>
SequenceT<typename Derived::Scalar> low_pass(const Eigen::MatrixBase<Derived>& x, Index cutoff) {
  if (cutoff < 1) throw ValidationError("low_pass: cutoff must be >= 1");
  auto s = dft(x);
  apply_low_pass(s, cutoff);
  return idft(s);
}

/// Real (L x L) matrix P with P * x == low_pass(x, c). Cached per (L, c).
std::shared_ptr<const Matrix> low_pass_operator(Index len, Index cutoff);

// Batch forms: each item transformed at its own valid length.
Spectrum dft(const FeatureSequence& x);
FeatureSequence idft(const Spectrum& s);
FeatureSequence low_pass(const FeatureSequence& x, Index cutoff);

}  // namespace fddet
