#pragma once

// Reference implementations written independently of the library, used only as test oracles.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

// O(n^2) DFT magnitude of x (already padded), bins 0..n/2.
inline std::vector<double> dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t % n) / double(n));
    out[k] = std::abs(acc);
  }
  return out;
}

inline double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / double(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size());
}

// Plain recursion of an ARX model with scalar loops; a[i], b[j][c] with inputs u[t][c].
inline std::vector<double> arx_run(const std::vector<double>& a, const std::vector<std::vector<double>>& b,
                                   double bias, const std::vector<std::vector<double>>& u) {
  std::vector<double> y(u.size(), 0.0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    double v = bias;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (t >= i + 1) v += a[i] * y[t - 1 - i];
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto& uu = u[t >= j ? t - j : 0];
      for (int c = 0; c < 3; ++c) v += b[j][c] * uu[c];
    }
    y[t] = v;
  }
  return y;
}

}  // namespace oracle
