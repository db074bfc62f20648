#include "maya/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <limits>
#include <random>

#include "maya/fft.hpp"

namespace maya {

std::string_view to_string(MaskFamily f) {
  switch (f) {
    case MaskFamily::Constant: return "Constant";
    case MaskFamily::UniformRandom: return "UniformRandom";
    case MaskFamily::Gaussian: return "Gaussian";
    case MaskFamily::Sinusoid: return "Sinusoid";
    case MaskFamily::GaussianSinusoid: return "GaussianSinusoid";
  }
  return "?";
}

MaskFamily parse_mask_family(std::string_view name) {
  for (auto f : {MaskFamily::Constant, MaskFamily::UniformRandom, MaskFamily::Gaussian,
                 MaskFamily::Sinusoid, MaskFamily::GaussianSinusoid})
    if (name == to_string(f)) return f;
  throw Error("unknown_mask", "unknown mask family '" + std::string(name) + "'");
}

void MaskRanges::validate() const {
  auto range_ok = [](double lo, double hi) { return lo >= 0 && hi >= lo; };
  if (!range_ok(level_lo, level_hi) || !range_ok(offset_lo, offset_hi) || !range_ok(mu_lo, mu_hi) ||
      !range_ok(amp_lo, amp_hi) || !range_ok(sigma_lo, sigma_hi) || !range_ok(freq_lo, freq_hi))
    throw Error("invalid_mask_ranges", "mask ranges must satisfy 0 <= lo <= hi");
  if (freq_hi >= 0.5) throw Error("invalid_mask_ranges", "sinusoid frequency must stay below Nyquist");
  if (hold_min < 1 || hold_max < hold_min) throw Error("invalid_mask_ranges", "bad hold range");
  if (constant_level < 0 || constant_level > 1 || combined_share <= 0)
    throw Error("invalid_mask_ranges", "bad constant level or combined share");
}

MaskProgram::MaskProgram(MaskFamily family, double tdp_w, double sample_freq_hz, std::uint64_t seed,
                         MaskRanges ranges)
    : family_(family), tdp_(tdp_w), sample_freq_(sample_freq_hz), ranges_(ranges), rng_(seed) {
  ranges_.validate();
  if (!(tdp_w > 0) || !(sample_freq_hz > 0))
    throw Error("invalid_mask", "tdp and sample frequency must be positive");
}

void MaskProgram::set_params(const MaskParams& params, int hold) {
  params_ = params;
  pinned_ = hold < 0;
  hold_remaining_ = std::max(hold, 0);
}

void MaskProgram::redraw() {
  const auto& r = ranges_;
  auto u = [this](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); };
  hold_remaining_ = std::uniform_int_distribution<int>(r.hold_min, r.hold_max)(rng_);
  MaskParams p;
  switch (family_) {
    case MaskFamily::Constant:
      p.level = r.constant_level * tdp_;
      break;
    case MaskFamily::UniformRandom:
      p.level = u(r.level_lo, r.level_hi) * tdp_;
      break;
    case MaskFamily::Gaussian:
      p.mu = u(r.mu_lo, r.mu_hi) * tdp_;
      p.sigma = u(r.sigma_lo, r.sigma_hi) * tdp_;
      break;
    case MaskFamily::Sinusoid:
      p.offset = u(r.offset_lo, r.offset_hi) * tdp_;
      p.amp = u(r.amp_lo, r.amp_hi) * tdp_;
      p.freq_hz = u(r.freq_lo, r.freq_hi) * sample_freq_;
      break;
    case MaskFamily::GaussianSinusoid:
      p.offset = u(r.offset_lo, r.offset_hi) * r.combined_share * tdp_;
      p.amp = u(r.amp_lo, r.amp_hi) * tdp_;
      p.freq_hz = u(r.freq_lo, r.freq_hi) * sample_freq_;
      p.mu = u(r.mu_lo, r.mu_hi) * r.combined_share * tdp_;
      p.sigma = u(r.sigma_lo, r.sigma_hi) * tdp_;
      break;
  }
  params_ = p;
  ++rerandomizations_;
}

double MaskProgram::next_target(std::int64_t t) {
  if (hold_remaining_ == 0 && !pinned_) redraw();
  if (hold_remaining_ > 0) --hold_remaining_;
  const auto& p = params_;
  auto sine = [&] {
    return p.offset + p.amp * std::sin(2.0 * std::numbers::pi * p.freq_hz * static_cast<double>(t) / sample_freq_);
  };
  auto noise = [&] { return std::normal_distribution<double>(p.mu, p.sigma)(rng_); };
  double r = 0.0;
  switch (family_) {
    case MaskFamily::Constant:
    case MaskFamily::UniformRandom: r = p.level; break;
    case MaskFamily::Gaussian: r = noise(); break;
    case MaskFamily::Sinusoid: r = sine(); break;
    case MaskFamily::GaussianSinusoid: r = sine() + noise(); break;
  }
  if (!std::isfinite(r)) r = 0.0;
  return std::clamp(r, 0.0, tdp_);
}

std::vector<double> generate_mask(MaskFamily family, int n_samples, std::uint64_t seed, double tdp_w,
                                  double sample_freq_hz, const MaskRanges& ranges) {
  MaskProgram mask(family, tdp_w, sample_freq_hz, seed, ranges);
  std::vector<double> out(n_samples);
  for (int t = 0; t < n_samples; ++t) out[t] = mask.next_target(t);
  return out;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = (m + *std::max_element(v.begin(), v.begin() + mid)) / 2.0;
  return m;
}

// (1.4826 * MAD of first differences)^2 / 2: local variance, blind to slow level moves.
double local_variance(std::span<const double> w) {
  std::vector<double> d(w.size() - 1);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) d[i] = w[i + 1] - w[i];
  const double med = median(d);
  for (double& x : d) x = std::abs(x - med);
  const double s = 1.4826 * median(d);
  return s * s / 2.0;
}

double flatness_of_differences(std::span<const double> x) {
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  for (double& v : d) v -= mean;
  const auto mag = real_fft_magnitude(d, next_pow2(d.size()));
  double log_sum = 0.0, sum = 0.0;
  for (std::size_t k = 1; k < mag.size(); ++k) {
    const double p = mag[k] * mag[k];
    log_sum += std::log(p + 1e-30);
    sum += p;
  }
  const double count = static_cast<double>(mag.size() - 1);
  if (sum / count < 1e-18) return 0.0;
  return std::exp(log_sum / count) / (sum / count);
}

// Peak prominence in one Hann-tapered window: highest interior local maximum over the median bin.
double window_peak_ratio(std::span<const double> w, int* count, double prominence) {
  const std::size_t n = w.size();
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
  std::vector<double> tapered(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n - 1));
    tapered[i] = (w[i] - mean) * hann;
  }
  const auto mag = real_fft_magnitude(tapered, n);
  std::vector<double> bins(mag.begin() + 1, mag.end());
  const double top = *std::max_element(bins.begin(), bins.end());
  *count = 0;
  if (top < 1e-9) return 0.0;
  const double med = median(bins);
  double best = 0.0;
  for (std::size_t k = 1; k + 1 < bins.size(); ++k) {
    if (bins[k] >= bins[k - 1] && bins[k] >= bins[k + 1]) {
      best = std::max(best, bins[k]);
      if (bins[k] >= prominence * med) ++*count;
    }
  }
  return med > 0 ? best / med : (best > 0 ? std::numeric_limits<double>::infinity() : 0.0);
}

}  // namespace

SpectralSignature classify_signal(std::span<const double> x, double tdp_w, const SignatureThresholds& th) {
  SpectralSignature s;
  const std::size_t win = static_cast<std::size_t>(th.window);
  if (x.size() < 2 * win) throw Error("signal_too_short", "signature needs at least two windows");

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double vlo = lo, vhi = 0.0;
  for (std::size_t i = 0; i + win <= x.size(); i += win) {
    auto w = x.subspan(i, win);
    const double m = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(win);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    const double v = local_variance(w);
    vlo = std::min(vlo, v);
    vhi = std::max(vhi, v);
  }
  s.mean_spread_w = hi - lo;
  s.mean_changes = s.mean_spread_w > th.mean_spread_frac * tdp_w;
  if (vhi <= 1e-12) {
    s.variance_ratio = 1.0;
  } else {
    s.variance_ratio = vlo > 0 ? vhi / vlo : std::numeric_limits<double>::infinity();
  }
  s.variance_changes = s.variance_ratio > th.variance_ratio;

  s.flatness = flatness_of_differences(x);
  s.spread = s.flatness >= th.flatness;

  const std::size_t sw = static_cast<std::size_t>(th.stft_window);
  std::vector<double> ratios;
  std::vector<int> counts;
  for (std::size_t i = 0; i + sw <= x.size(); i += sw) {
    int c = 0;
    ratios.push_back(window_peak_ratio(x.subspan(i, sw), &c, th.peak_prominence));
    counts.push_back(c);
  }
  s.peak_ratio = median(ratios);
  s.peaks = s.peak_ratio >= th.peak_prominence;
  s.peak_count = static_cast<int>(median(std::vector<double>(counts.begin(), counts.end())));
  return s;
}

SpectralSignature spectral_signature(MaskFamily family, int n_samples, std::uint64_t seed, double tdp_w,
                                     double sample_freq_hz, const MaskRanges& ranges,
                                     const SignatureThresholds& th) {
  if (n_samples < 4096) throw Error("signal_too_short", "spectral_signature needs n_samples >= 4096");
  const auto x = generate_mask(family, n_samples, seed, tdp_w, sample_freq_hz, ranges);
  return classify_signal(x, tdp_w, th);
}

}  // namespace maya
