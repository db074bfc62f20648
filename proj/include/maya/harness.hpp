#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maya/analysis.hpp"
#include "maya/controller.hpp"
#include "maya/mask.hpp"
#include "maya/plant.hpp"
#include "maya/serialize.hpp"
#include "maya/sysid.hpp"
#include "maya/trace.hpp"
#include "maya/workloads.hpp"

namespace maya {

// One closed-loop (or open-loop) run. Demand restarts from the top if the trace outlasts the workload.
PowerTrace run_once(const WorkloadSpec& workload, Condition condition, const MachineProfile& profile,
                    const ControllerMatricesD* ctrl, std::optional<MaskProgram> mask, std::uint64_t seed,
                    int length, int run_id = 0);

// Mask for a Maya condition with the seed layout used by the campaign.
MaskProgram make_mask(Condition condition, const MachineProfile& profile, std::uint64_t seed,
                      const MaskRanges& ranges = {});

// Work serviced per sample: (f / f_max) * (1 - idle/100) * (1 - interference * balloon/100).
double service_rate(const ActuatorSetting& s, const MachineProfile& profile, double balloon_interference = 0.5);

// Samples until cumulative service reaches `work`; extrapolated at the mean rate if the trace ends first.
double completion_samples(const PowerTrace& trace, double work, const MachineProfile& profile,
                          double balloon_interference = 0.5);

struct RunDigest {
  Condition condition = Condition::Baseline;
  int app_id = 0;
  int run_id = 0;
  std::uint64_t seed = 0;
  double mean_power_w = 0.0;
  double completion = 0.0;
  std::vector<double> measured;
};

RunDigest digest(const PowerTrace& trace, Condition condition, int app_id, int run_id, double work,
                 const MachineProfile& profile, double balloon_interference = 0.5);

struct OverheadEntry {
  Condition condition = Condition::Baseline;
  double power_ratio = 1.0;       // mean over apps of mean power / Baseline mean power
  double completion_ratio = 1.0;  // mean over apps of completion / Baseline completion
  int runs = 0;

  double slowdown() const { return completion_ratio - 1.0; }
};

struct OverheadReport {
  std::vector<OverheadEntry> entries;

  const OverheadEntry& at(Condition c) const;
};

OverheadReport overhead_report(const std::vector<RunDigest>& runs);
OverheadReport overhead_report(const std::vector<PowerTrace>& traces, const std::vector<WorkloadSpec>& workloads,
                               const MachineProfile& profile, double balloon_interference = 0.5);

struct ModelBundle {
  ArxModelD model;
  double holdout_fit = 0.0;
  ControllerMatricesD controller;
  double spectral_radius = 0.0;
};

struct DesignOptions {
  Eigen::Vector3d weights{1.0, 1.0, 1.0};
  double deviation_bound = 0.1;
  int identification_length = 4000;
  std::optional<Eigen::Vector3d> operating_point;  // default: SynthesisOptions::for_profile
  double effort_penalty = SynthesisOptions{}.effort_penalty;
  double integral_ratio = SynthesisOptions{}.integral_ratio;
};

// Identify the plant and synthesize the tracking controller.
ModelBundle design_loop(const MachineProfile& profile, std::uint64_t seed, const DesignOptions& options = {});

struct AttackConfig {
  int segment_length = 500;
  std::vector<int> hidden{64, 32};
  int epochs = 40;
  double learn_rate = 0.05;
  int batch_size = 32;
  double momentum = 0.0;
};

struct CampaignConfig {
  MachineProfile profile = MachineProfile::sys1();
  std::vector<Condition> conditions{Condition::Baseline, Condition::NoisyBaseline, Condition::MayaConstant,
                                    Condition::MayaGaussianSinusoid};
  std::vector<int> apps;  // empty = every built-in app
  std::vector<WorkloadSpec> workloads;  // empty = built-in apps
  int runs_per_app = 100;
  int trace_length = 2000;
  std::uint64_t seed = 1;
  AttackConfig attack;
  DesignOptions design;
  MaskRanges mask_ranges;
  double balloon_interference = 0.5;
  int averaging_min_runs = 30;
  int threads = 0;  // 0 = hardware concurrency
  bool write_traces = false;
  std::filesystem::path output_dir;

  void validate() const;
};

Json to_json(const CampaignConfig& c);
CampaignConfig campaign_from_json(const Json& j);

struct AttackResult {
  Condition condition = Condition::Baseline;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;       // adaptive: trained and tested on this condition
  double transfer_accuracy = 0.0;   // reference-trained model on this condition's test split
  Eigen::MatrixXd adaptive_confusion;
  Eigen::MatrixXd transfer_confusion;
};

struct CampaignResult {
  Json summary;
  std::vector<RunDigest> runs;
  std::vector<AttackResult> attacks;
  OverheadReport overhead;
  std::map<Condition, AveragingStudy> averaging;
  int failed_runs = 0;
};

// Generate every trace, then attacks, averaging, change points, spectra and overheads. If output_dir is
// set, artifacts are written there.
CampaignResult run_campaign(const CampaignConfig& config);

// Measured-power traces of every app under one condition, indexed by app then run.
std::map<int, std::vector<std::vector<double>>> collect_measured(const std::vector<WorkloadSpec>& apps,
                                                                Condition condition, const MachineProfile& profile,
                                                                const ControllerMatricesD* ctrl, int runs, int length,
                                                                std::uint64_t seed, const MaskRanges& ranges = {},
                                                                int threads = 0);

// Seed of run `run_id` of `app_id` under `condition` within a campaign seeded with `seed`.
std::uint64_t run_seed(std::uint64_t seed, Condition condition, int app_id, int run_id);

}  // namespace maya
