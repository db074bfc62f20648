#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maya/common.hpp"
#include "maya/plant.hpp"

namespace maya {

enum class WorkloadKind { App, Video };

struct PhaseSpec {
  double mean_demand_w = 0.0;
  double demand_sigma_w = 0.0;
  std::optional<int> loop_period;
  double loop_amp_w = 0.0;
  int duration = 1;
  // Per-loop-iteration offset drawn from the workload's content seed (video frames).
  double frame_jitter_w = 0.0;
};

struct WorkloadSpec {
  int app_id = 0;
  std::string name;
  WorkloadKind kind = WorkloadKind::App;
  std::vector<PhaseSpec> phases;
  double max_demand_w = 95.0;
  std::uint64_t content_seed = 0;

  int total_duration() const;
  // Start index of every phase after the first.
  std::vector<int> phase_boundaries() const;
  // Loop period covering the most samples, if any phase loops.
  std::optional<int> dominant_loop_period() const;
  void validate() const;
};

// Demand at sample t; rng == nullptr gives the noise-free signal.
double demand_at(const WorkloadSpec& spec, int t, Rng* rng);

std::vector<double> noise_free_demand(const WorkloadSpec& spec);

std::vector<WorkloadSpec> builtin_apps(const MachineProfile& profile);
std::vector<WorkloadSpec> builtin_videos(const MachineProfile& profile);
std::vector<WorkloadSpec> builtin_suite(const MachineProfile& profile);

// Noise-free means differ by >= 2 W or dominant loop periods by >= 10 samples.
bool distinguishable(const WorkloadSpec& a, const WorkloadSpec& b);

}  // namespace maya
