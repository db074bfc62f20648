#include "maya/plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "maya/serialize.hpp"

namespace maya {
namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  const int count = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= count; ++i) g.push_back(std::round((lo + i * step) * 1e6) / 1e6);
  return g;
}

bool contains(std::span<const double> g, double v) {
  return std::any_of(g.begin(), g.end(), [v](double x) { return std::abs(x - v) <= 1e-9; });
}

bool strictly_increasing(const std::vector<double>& g) {
  return std::adjacent_find(g.begin(), g.end(), std::greater_equal<>()) == g.end();
}

}  // namespace

MachineProfile MachineProfile::sys1() {
  MachineProfile p;
  p.dvfs_grid = grid(1.2, 2.0, 0.1);
  p.idle_grid = grid(0, 48, 4);
  p.balloon_grid = grid(0, 100, 10);
  p.balloon_power_w = {0.0, 8.0, 15.5, 23.0, 30.0, 37.0, 44.0, 50.5, 57.0, 63.5, 70.0};
  return p;
}

MachineProfile MachineProfile::sys2() {
  MachineProfile p = sys1();
  p.name = "sys2";
  p.tdp_w = 140.0;
  p.dvfs_grid = grid(1.2, 2.6, 0.1);
  p.base_idle_w = 6.0;
  for (double& w : p.balloon_power_w) w *= 1.5;
  return p;
}

double MachineProfile::dvfs_scale(double ghz) const {
  const double r = ghz / dvfs_max();
  return r * r;
}

double MachineProfile::balloon_power(double pct) const {
  for (std::size_t i = 0; i < balloon_grid.size(); ++i)
    if (std::abs(balloon_grid[i] - pct) <= 1e-9) return balloon_power_w[i];
  throw Error("off_grid", "balloon_pct " + std::to_string(pct) + " is not on the balloon grid");
}

Eigen::Vector3d MachineProfile::command_min() const {
  return {dvfs_grid.front(), idle_grid.front(), balloon_grid.front()};
}

Eigen::Vector3d MachineProfile::command_max() const {
  return {dvfs_grid.back(), idle_grid.back(), balloon_grid.back()};
}

ActuatorSetting MachineProfile::max_performance() const {
  return {dvfs_grid.back(), idle_grid.front(), balloon_grid.front()};
}

bool MachineProfile::on_grid(const ActuatorSetting& s) const {
  return contains(dvfs_grid, s.dvfs_ghz) && contains(idle_grid, s.idle_pct) &&
         contains(balloon_grid, s.balloon_pct);
}

int MachineProfile::settle_periods(double tolerance) const {
  // Residual after k samples of a unit step is (1 - alpha)^k.
  return static_cast<int>(std::ceil(std::log(tolerance) / std::log(1.0 - lowpass_alpha)));
}

void MachineProfile::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid_profile", what); };
  if (!(tdp_w > 0)) fail("tdp_w must be positive");
  if (!(sample_period_ms > 0)) fail("sample_period_ms must be positive");
  if (!(resolution_w > 0)) fail("resolution_w must be positive");
  if (!(noise_sigma_w >= 0)) fail("noise_sigma_w must be non-negative");
  if (!(base_idle_w >= 0)) fail("base_idle_w must be non-negative");
  if (!(lowpass_alpha > 0 && lowpass_alpha <= 1)) fail("lowpass_alpha must lie in (0, 1]");
  for (const auto* g : {&dvfs_grid, &idle_grid, &balloon_grid})
    if (g->empty() || !strictly_increasing(*g)) fail("actuator grids must be non-empty and strictly increasing");
  if (dvfs_grid.front() <= 0) fail("dvfs levels must be positive");
  if (balloon_power_w.size() != balloon_grid.size()) fail("balloon_power_w must match balloon_grid");
  if (!std::is_sorted(balloon_power_w.begin(), balloon_power_w.end())) fail("balloon_power_w must be monotone");
  if (idle_grid.front() < 0 || idle_grid.back() > 100) fail("idle_grid must lie in [0, 100]");
}

std::string MachineProfile::hash() const { return fnv1a_hex(to_json(*this).dump()); }

PlantState make_plant_state(const MachineProfile& profile, std::uint64_t seed, bool noise_enabled) {
  PlantState s;
  s.rng.seed(seed);
  s.noise_enabled = noise_enabled;
  s.current_setting = profile.max_performance();
  s.thermal_lag_w = profile.base_idle_w;
  return s;
}

void prime_plant(PlantState& state, const ActuatorSetting& setting, double demand_w,
                 const MachineProfile& profile) {
  state.thermal_lag_w = static_power(setting, demand_w, profile);
  state.current_setting = setting;
}

double static_power(const ActuatorSetting& s, double demand_w, const MachineProfile& p) {
  const double dynamic = demand_w * (1.0 - s.idle_pct / 100.0) + p.balloon_power(s.balloon_pct);
  return std::clamp(p.base_idle_w + p.dvfs_scale(s.dvfs_ghz) * dynamic, 0.0, p.tdp_w);
}

double step_plant(PlantState& state, const ActuatorSetting& setting, double demand_w,
                  const MachineProfile& profile) {
  if (!profile.on_grid(setting))
    throw Error("off_grid", "actuator setting is not on the profile grids");
  if (!std::isfinite(demand_w) || demand_w < 0 || demand_w > profile.tdp_w)
    throw Error("demand_out_of_range", "activity demand must lie in [0, tdp]");
  state.current_setting = setting;
  const double x = static_power(setting, demand_w, profile);
  state.thermal_lag_w += profile.lowpass_alpha * (x - state.thermal_lag_w);
  double y = state.thermal_lag_w;
  if (state.noise_enabled && profile.noise_sigma_w > 0)
    y += std::normal_distribution<double>(0.0, profile.noise_sigma_w)(state.rng);
  y = std::clamp(y, 0.0, profile.tdp_w);
  y = std::round(y / profile.resolution_w) * profile.resolution_w;
  return std::clamp(y, 0.0, profile.tdp_w) + 0.0;  // no negative zero
}

double snap_to_grid(double value, std::span<const double> g) {
  if (std::isnan(value) || value <= g.front()) return g.front();
  if (value >= g.back()) return g.back();
  auto hi = std::lower_bound(g.begin(), g.end(), value);
  auto lo = hi - 1;
  // Ties go to the lower grid point.
  return (*hi - value) < (value - *lo) - 1e-9 ? *hi : *lo;
}

ActuatorSetting quantize_setting(const Eigen::Vector3d& c, const MachineProfile& p) {
  return {snap_to_grid(c(0), p.dvfs_grid), snap_to_grid(c(1), p.idle_grid),
          snap_to_grid(c(2), p.balloon_grid)};
}

}  // namespace maya
