#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

#include "maya/common.hpp"

namespace maya {

struct ActuatorSetting {
  double dvfs_ghz = 0.0;
  double idle_pct = 0.0;
  double balloon_pct = 0.0;

  Eigen::Vector3d as_vector() const { return {dvfs_ghz, idle_pct, balloon_pct}; }
  static ActuatorSetting from_vector(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

  friend bool operator==(const ActuatorSetting&, const ActuatorSetting&) = default;
};

struct MachineProfile {
  std::string name = "sys1";
  double tdp_w = 95.0;
  std::vector<double> dvfs_grid;
  std::vector<double> idle_grid;
  std::vector<double> balloon_grid;
  double sample_period_ms = 20.0;
  double noise_sigma_w = 0.25;
  double resolution_w = 0.01;
  std::uint64_t seed = 1;
  double base_idle_w = 4.0;
  // Watts drawn by the balloon at each balloon_grid level, before DVFS scaling.
  std::vector<double> balloon_power_w;
  // Weight of the newest sample in the first-order thermal lag.
  double lowpass_alpha = 0.6;

  static MachineProfile sys1();
  static MachineProfile sys2();

  double sample_freq_hz() const { return 1000.0 / sample_period_ms; }
  double dvfs_max() const { return dvfs_grid.back(); }
  // Multiplicative DVFS effect, (f / f_max)^2.
  double dvfs_scale(double ghz) const;
  double balloon_power(double pct) const;

  Eigen::Vector3d command_min() const;
  Eigen::Vector3d command_max() const;
  ActuatorSetting max_performance() const;
  bool on_grid(const ActuatorSetting& s) const;

  // Samples needed for a step to settle within `tolerance` of its final value.
  int settle_periods(double tolerance = 0.02) const;

  void validate() const;
  std::string hash() const;
};

struct PlantState {
  double thermal_lag_w = 0.0;
  Rng rng;
  ActuatorSetting current_setting;
  bool noise_enabled = true;
};

PlantState make_plant_state(const MachineProfile& profile, std::uint64_t seed,
                            bool noise_enabled = true);

// Prime the thermal lag at the steady response of (setting, demand).
void prime_plant(PlantState& state, const ActuatorSetting& setting, double demand_w,
                 const MachineProfile& profile);

// Static plant law before the thermal lag, clamped to [0, tdp].
double static_power(const ActuatorSetting& setting, double demand_w, const MachineProfile& profile);

double step_plant(PlantState& state, const ActuatorSetting& setting, double demand_w,
                  const MachineProfile& profile);

double snap_to_grid(double value, std::span<const double> grid);

ActuatorSetting quantize_setting(const Eigen::Vector3d& continuous, const MachineProfile& profile);

}  // namespace maya
