#pragma once

#include <Eigen/Core>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "maya/common.hpp"

namespace maya {

struct Spectrum {
  Eigen::VectorXd frequency_hz;  // bin k -> k * rate / n
  Eigen::VectorXd magnitude;     // |X_k|, k = 0..n/2
  Eigen::Index n = 0;            // padded transform length
};

// DFT magnitude of the mean-removed signal, zero-padded to a power of two.
Spectrum fft_magnitude(std::span<const double> signal, double sample_rate_hz = 1.0);

// Short-time spectra of Hann-tapered, mean-removed windows.
std::vector<Spectrum> short_time_spectra(std::span<const double> signal, int window, int hop,
                                         double sample_rate_hz = 1.0);

struct Peak {
  Eigen::Index bin = 0;
  double magnitude = 0.0;
};

std::vector<Peak> detect_peaks(const Spectrum& spectrum, double prominence);

struct ChangePointReport {
  std::vector<Eigen::Index> boundaries;
  std::vector<double> segment_mean;
  std::vector<double> segment_variance;
};

double default_penalty(Eigen::Index n);

// Binary segmentation under a Gaussian cost with free mean and variance per segment.
ChangePointReport change_points(std::span<const double> signal, double penalty, int min_segment = 5);
ChangePointReport change_points(std::span<const double> signal);

struct BoundaryMatch {
  int detected = 0;
  int hits = 0;         // detected boundaries within tolerance of a true boundary
  double hit_fraction = 0.0;
  double chance_rate = 0.0;  // detected * (2 * tolerance + 1) / length
};

BoundaryMatch match_boundaries(const std::vector<Eigen::Index>& detected,
                               const std::vector<Eigen::Index>& truth, int tolerance,
                               Eigen::Index length);

struct AveragingStats {
  int app_id = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> outliers;
  double mean = 0.0;
  double variance = 0.0;
};

struct AveragingStudy {
  std::string condition;
  int runs = 0;
  std::vector<AveragingStats> per_app;
  std::map<int, Eigen::VectorXd> averaged;
  double pooled_iqr = 0.0;  // mean of the per-app IQRs
  double max_median_gap = 0.0;
};

// Linear-interpolation quantile of an ascending sample.
double quantile_sorted(const std::vector<double>& sorted, double q);

AveragingStats box_stats(std::span<const double> series, int app_id = 0);

Eigen::VectorXd pointwise_mean(const std::vector<std::vector<double>>& runs);

AveragingStudy averaging_study(const std::map<int, std::vector<std::vector<double>>>& traces_by_app,
                               const std::string& condition, int min_runs = 30);

double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace maya
