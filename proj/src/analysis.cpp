#include "maya/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <limits>
#include <utility>

#include "maya/common.hpp"
#include "maya/fft.hpp"

namespace maya {
namespace {

Spectrum make_spectrum(const std::vector<double>& mag, std::size_t n, double rate) {
  Spectrum s;
  s.n = static_cast<Eigen::Index>(n);
  s.magnitude = Eigen::Map<const Eigen::VectorXd>(mag.data(), static_cast<Eigen::Index>(mag.size()));
  s.frequency_hz = Eigen::VectorXd::LinSpaced(s.magnitude.size(), 0.0, rate / 2.0);
  return s;
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

Spectrum fft_magnitude(std::span<const double> signal, double sample_rate_hz) {
  if (signal.size() < 2) throw Error("signal_too_short", "fft_magnitude needs at least 2 samples");
  const double mean = mean_of(signal);
  std::vector<double> x(signal.begin(), signal.end());
  for (double& v : x) v -= mean;
  const std::size_t n = next_pow2(x.size());
  return make_spectrum(real_fft_magnitude(x, n), n, sample_rate_hz);
}

std::vector<Spectrum> short_time_spectra(std::span<const double> signal, int window, int hop,
                                         double sample_rate_hz) {
  if (window < 2 || hop < 1) throw Error("invalid_window", "window must be >= 2 and hop >= 1");
  std::vector<Spectrum> out;
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t n = next_pow2(w);
  for (std::size_t i = 0; i + w <= signal.size(); i += static_cast<std::size_t>(hop)) {
    auto seg = signal.subspan(i, w);
    const double mean = mean_of(seg);
    std::vector<double> x(w);
    for (std::size_t k = 0; k < w; ++k)
      x[k] = (seg[k] - mean) * (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / static_cast<double>(w - 1)));
    out.push_back(make_spectrum(real_fft_magnitude(x, n), n, sample_rate_hz));
  }
  return out;
}

std::vector<Peak> detect_peaks(const Spectrum& s, double prominence) {
  if (!(prominence > 1)) throw Error("invalid_prominence", "prominence must exceed 1");
  const Eigen::Index len = s.magnitude.size();
  std::vector<Peak> peaks;
  if (len < 3) return peaks;
  std::vector<double> bins(s.magnitude.data() + 1, s.magnitude.data() + len);
  std::nth_element(bins.begin(), bins.begin() + bins.size() / 2, bins.end());
  double med = bins[bins.size() / 2];
  if (bins.size() % 2 == 0) med = (med + *std::max_element(bins.begin(), bins.begin() + bins.size() / 2)) / 2.0;
  const double threshold = prominence * med;
  for (Eigen::Index k = 1; k < len; ++k) {
    const double v = s.magnitude(k);
    const bool left = k == 1 || v > s.magnitude(k - 1);
    const bool right = k == len - 1 || v >= s.magnitude(k + 1);
    if (left && right && v > 0 && v >= threshold) peaks.push_back({k, v});
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
  return peaks;
}

double default_penalty(Eigen::Index n) { return 3.0 * std::log(static_cast<double>(n)); }

ChangePointReport change_points(std::span<const double> x) {
  return change_points(x, default_penalty(static_cast<Eigen::Index>(x.size())));
}

ChangePointReport change_points(std::span<const double> x, double penalty, int min_segment) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  if (n < 10) throw Error("signal_too_short", "change_points needs at least 10 samples");
  if (min_segment < 2) throw Error("invalid_segment", "min_segment must be >= 2");
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    s1[i + 1] = s1[i] + x[i];
    s2[i + 1] = s2[i] + x[i] * x[i];
  }
  auto raw_var = [&](Eigen::Index a, Eigen::Index b) {
    const double len = static_cast<double>(b - a);
    const double m = (s1[b] - s1[a]) / len;
    return std::max(0.0, (s2[b] - s2[a]) / len - m * m);
  };
  const double floor = std::max(1e-8, 1e-6 * raw_var(0, n));
  auto cost = [&](Eigen::Index a, Eigen::Index b) {
    return static_cast<double>(b - a) * std::log(std::max(raw_var(a, b), floor));
  };

  std::vector<Eigen::Index> found;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack{{0, n}};
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    if (b - a < 2 * min_segment) continue;
    const double whole = cost(a, b);
    double best = whole;
    Eigen::Index split = -1;
    for (Eigen::Index k = a + min_segment; k <= b - min_segment; ++k) {
      const double c = cost(a, k) + cost(k, b);
      if (c < best) {
        best = c;
        split = k;
      }
    }
    if (split >= 0 && whole - best > penalty) {
      found.push_back(split);
      stack.push_back({split, b});
      stack.push_back({a, split});
    }
  }
  std::sort(found.begin(), found.end());

  ChangePointReport r;
  r.boundaries = found;
  Eigen::Index start = 0;
  found.push_back(n);
  for (Eigen::Index end : found) {
    r.segment_mean.push_back((s1[end] - s1[start]) / static_cast<double>(end - start));
    r.segment_variance.push_back(raw_var(start, end));
    start = end;
  }
  return r;
}

BoundaryMatch match_boundaries(const std::vector<Eigen::Index>& detected,
                               const std::vector<Eigen::Index>& truth, int tolerance, Eigen::Index length) {
  BoundaryMatch m;
  m.detected = static_cast<int>(detected.size());
  for (Eigen::Index d : detected)
    if (std::any_of(truth.begin(), truth.end(), [&](Eigen::Index t) { return std::abs(d - t) <= tolerance; }))
      ++m.hits;
  m.hit_fraction = m.detected ? static_cast<double>(m.hits) / m.detected : 0.0;
  m.chance_rate = length > 0 ? static_cast<double>(m.detected) * (2 * tolerance + 1) / static_cast<double>(length) : 0.0;
  return m;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) throw Error("empty_sample", "quantile of an empty sample");
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

AveragingStats box_stats(std::span<const double> series, int app_id) {
  std::vector<double> v(series.begin(), series.end());
  std::sort(v.begin(), v.end());
  AveragingStats s;
  s.app_id = app_id;
  s.q25 = quantile_sorted(v, 0.25);
  s.median = quantile_sorted(v, 0.5);
  s.q75 = quantile_sorted(v, 0.75);
  const double iqr = s.q75 - s.q25;
  const double lo_fence = s.q25 - 1.5 * iqr, hi_fence = s.q75 + 1.5 * iqr;
  s.whisker_lo = *std::find_if(v.begin(), v.end(), [&](double x) { return x >= lo_fence; });
  s.whisker_hi = *std::find_if(v.rbegin(), v.rend(), [&](double x) { return x <= hi_fence; });
  for (double x : v)
    if (x < lo_fence || x > hi_fence) s.outliers.push_back(x);
  s.mean = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.variance = ss / static_cast<double>(v.size());
  return s;
}

Eigen::VectorXd pointwise_mean(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw Error("empty_sample", "no runs to average");
  const std::size_t len = runs.front().size();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(len));
  for (const auto& r : runs) {
    if (r.size() != len) throw Error("length_mismatch", "all traces must have equal length");
    acc += Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(len));
  }
  return acc / static_cast<double>(runs.size());
}

AveragingStudy averaging_study(const std::map<int, std::vector<std::vector<double>>>& traces_by_app,
                               const std::string& condition, int min_runs) {
  AveragingStudy study;
  study.condition = condition;
  if (traces_by_app.empty()) throw Error("empty_sample", "averaging_study needs traces");
  const std::size_t len = traces_by_app.begin()->second.empty() ? 0 : traces_by_app.begin()->second.front().size();
  study.runs = std::numeric_limits<int>::max();
  double iqr_sum = 0.0;
  for (const auto& [app, runs] : traces_by_app) {
    if (static_cast<int>(runs.size()) < min_runs)
      throw Error("insufficient_runs", "averaging_study needs >= " + std::to_string(min_runs) + " runs per app");
    for (const auto& r : runs)
      if (r.size() != len) throw Error("length_mismatch", "all traces must have equal length");
    study.runs = std::min(study.runs, static_cast<int>(runs.size()));
    Eigen::VectorXd avg = pointwise_mean(runs);
    auto stats = box_stats(std::span<const double>(avg.data(), static_cast<std::size_t>(avg.size())), app);
    iqr_sum += stats.q75 - stats.q25;
    study.per_app.push_back(std::move(stats));
    study.averaged.emplace(app, std::move(avg));
  }
  study.pooled_iqr = iqr_sum / static_cast<double>(study.per_app.size());
  for (const auto& a : study.per_app)
    for (const auto& b : study.per_app)
      study.max_median_gap = std::max(study.max_median_gap, std::abs(a.median - b.median));
  return study;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw Error("length_mismatch", "pearson needs equal lengths >= 2");
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace maya
