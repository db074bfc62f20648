#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace maya {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 DFT, X_k = sum_t x_t exp(-2 pi i k t / N). Size must be a power of two.
template <typename Scalar>
void fft_inplace(std::vector<std::complex<Scalar>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const Scalar angle = -2 * std::numbers::pi_v<Scalar> / static_cast<Scalar>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<Scalar> w = std::polar(Scalar(1), angle * static_cast<Scalar>(k));
        const std::complex<Scalar> u = a[i + k];
        const std::complex<Scalar> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

// |X_k| for k = 0..N/2 of a real sequence zero-padded to length N.
template <typename Scalar>
std::vector<Scalar> real_fft_magnitude(const std::vector<Scalar>& x, std::size_t n) {
  std::vector<std::complex<Scalar>> buf(n);
  for (std::size_t i = 0; i < x.size() && i < n; ++i) buf[i] = x[i];
  fft_inplace(buf);
  std::vector<Scalar> mag(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

}  // namespace maya
