#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maya/common.hpp"

namespace maya {

enum class MaskFamily { Constant, UniformRandom, Gaussian, Sinusoid, GaussianSinusoid };

std::string_view to_string(MaskFamily family);
MaskFamily parse_mask_family(std::string_view name);

// Draw ranges as fractions of tdp (levels) or of the sample frequency (freq).
struct MaskRanges {
  double level_lo = 0.2, level_hi = 0.6;
  double offset_lo = 0.2, offset_hi = 0.6;
  double mu_lo = 0.2, mu_hi = 0.6;
  double amp_lo = 0.05, amp_hi = 0.25;
  double sigma_lo = 0.02, sigma_hi = 0.08;
  double freq_lo = 1.0 / 200.0, freq_hi = 0.25;
  double constant_level = 0.2;
  // GaussianSinusoid draws Offset and mu from this share of their ranges so the sum
  // spans the same band as a single level.
  double combined_share = 0.5;
  int hold_min = 6, hold_max = 120;

  void validate() const;
};

struct MaskParams {
  double offset = 0.0;
  double amp = 0.0;
  double freq_hz = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double level = 0.0;
};

class MaskProgram {
 public:
  MaskProgram(MaskFamily family, double tdp_w, double sample_freq_hz, std::uint64_t seed,
              MaskRanges ranges = {});

  // Target for absolute sample index t; consumes one sample of the hold.
  double next_target(std::int64_t t);

  MaskFamily family() const { return family_; }
  const MaskParams& params() const { return params_; }
  int hold_remaining() const { return hold_remaining_; }
  // Number of parameter draws so far, the first included.
  int rerandomizations() const { return rerandomizations_; }
  double tdp() const { return tdp_; }
  double sample_freq_hz() const { return sample_freq_; }

  // Replace the held parameters (tests and fixed demonstrations); hold < 0 holds forever.
  void set_params(const MaskParams& params, int hold);

 private:
  void redraw();

  MaskFamily family_;
  double tdp_;
  double sample_freq_;
  MaskRanges ranges_;
  Rng rng_;
  MaskParams params_;
  int hold_remaining_ = 0;
  int rerandomizations_ = 0;
  bool pinned_ = false;
};

std::vector<double> generate_mask(MaskFamily family, int n_samples, std::uint64_t seed, double tdp_w,
                                  double sample_freq_hz, const MaskRanges& ranges = {});

// Decision thresholds for the four yes/no properties of a signal.
struct SignatureThresholds {
  int window = 256;
  double mean_spread_frac = 0.05;   // of tdp, spread of window means
  double variance_ratio = 2.0;      // max/min robust local variance across windows
  double flatness = 0.3;            // spectral flatness of first differences
  int stft_window = 128;
  double peak_prominence = 5.0;     // median over windows of max peak / median bin
};

struct SpectralSignature {
  bool mean_changes = false;
  bool variance_changes = false;
  bool spread = false;
  bool peaks = false;
  double mean_spread_w = 0.0;
  double variance_ratio = 0.0;
  double flatness = 0.0;
  double peak_ratio = 0.0;
  int peak_count = 0;  // prominent peaks in the median window
};

SpectralSignature classify_signal(std::span<const double> signal, double tdp_w,
                                  const SignatureThresholds& th = {});

SpectralSignature spectral_signature(MaskFamily family, int n_samples, std::uint64_t seed,
                                     double tdp_w = 95.0, double sample_freq_hz = 50.0,
                                     const MaskRanges& ranges = {}, const SignatureThresholds& th = {});

}  // namespace maya
