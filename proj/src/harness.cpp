#include "maya/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "parallel.hpp"

namespace maya {

std::uint64_t run_seed(std::uint64_t seed, Condition condition, int app_id, int run_id) {
  return derive_seed(seed, 0x72756e00 + static_cast<std::uint64_t>(condition), static_cast<std::uint64_t>(app_id),
                     static_cast<std::uint64_t>(run_id));
}

MaskProgram make_mask(Condition condition, const MachineProfile& profile, std::uint64_t seed,
                      const MaskRanges& ranges) {
  return MaskProgram(mask_family_for(condition), profile.tdp_w, profile.sample_freq_hz(), derive_seed(seed, 0x6d61736b),
                     ranges);
}

PowerTrace run_once(const WorkloadSpec& workload, Condition condition, const MachineProfile& profile,
                    const ControllerMatricesD* ctrl, std::optional<MaskProgram> mask, std::uint64_t seed, int length,
                    int run_id) {
  const bool maya = is_maya(condition);
  if (maya && (!ctrl || !mask)) throw Error("missing_controller", "Maya conditions need a controller and a mask");
  if (!maya && (ctrl || mask)) throw Error("unexpected_controller", "baseline conditions take no controller or mask");
  if (length < 1) throw Error("invalid_length", "trace length must be >= 1");

  Rng demand_rng(derive_seed(seed, 1));
  PlantState plant = make_plant_state(profile, derive_seed(seed, 2));
  ActuatorSetting setting = profile.max_performance();
  if (condition == Condition::NoisyBaseline) {
    Rng pick(derive_seed(seed, 3));
    const auto& f = profile.dvfs_grid;
    const auto& i = profile.idle_grid;
    setting.dvfs_ghz = f[std::uniform_int_distribution<std::size_t>(0, f.size() - 1)(pick)];
    setting.idle_pct = i[std::uniform_int_distribution<std::size_t>(0, i.size() - 1)(pick)];
  }
  ControllerState<double> cstate;
  if (maya) {
    cstate = ControllerState<double>::zero(*ctrl);
    setting = quantize_setting(ctrl->operating_point, profile);
  }
  prime_plant(plant, setting, demand_at(workload, 0, nullptr), profile);
  double last = std::round(plant.thermal_lag_w / profile.resolution_w) * profile.resolution_w;

  PowerTrace trace;
  trace.header = {profile.hash(), seed, static_cast<int>(std::lround(profile.sample_period_ms))};
  trace.records.reserve(static_cast<std::size_t>(length));
  const int duration = workload.total_duration();
  for (int t = 0; t < length; ++t) {
    TraceRecord r;
    r.t = t;
    r.app_id = workload.app_id;
    r.run_id = run_id;
    r.condition = condition;
    if (maya) {
      const double target = mask->next_target(t);
      auto step = control_step(*ctrl, cstate, target, last);
      cstate = std::move(step.state);
      setting = quantize_setting(step.command, profile);
      r.target_w = target;
    }
    const double demand = demand_at(workload, t % duration, &demand_rng);
    last = step_plant(plant, setting, demand, profile);
    r.measured_w = last;
    r.setting = setting;
    trace.records.push_back(r);
  }
  return trace;
}

double service_rate(const ActuatorSetting& s, const MachineProfile& p, double k) {
  return (s.dvfs_ghz / p.dvfs_max()) * (1.0 - s.idle_pct / 100.0) * (1.0 - k * s.balloon_pct / 100.0);
}

double completion_samples(const PowerTrace& trace, double work, const MachineProfile& p, double k) {
  double done = 0.0;
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    const double rate = service_rate(trace.records[t].setting, p, k);
    if (done + rate >= work) return static_cast<double>(t) + (work - done) / rate;
    done += rate;
  }
  if (done <= 0) return std::numeric_limits<double>::infinity();
  return work * static_cast<double>(trace.records.size()) / done;
}

RunDigest digest(const PowerTrace& trace, Condition condition, int app_id, int run_id, double work,
                 const MachineProfile& profile, double k) {
  RunDigest d;
  d.condition = condition;
  d.app_id = app_id;
  d.run_id = run_id;
  d.seed = trace.header.seed;
  d.measured = trace.measured();
  d.mean_power_w = std::accumulate(d.measured.begin(), d.measured.end(), 0.0) / static_cast<double>(d.measured.size());
  d.completion = completion_samples(trace, work, profile, k);
  return d;
}

const OverheadEntry& OverheadReport::at(Condition c) const {
  for (const auto& e : entries)
    if (e.condition == c) return e;
  throw Error("missing_condition", std::string(to_string(c)) + " not in overhead report");
}

OverheadReport overhead_report(const std::vector<RunDigest>& runs) {
  struct Acc {
    double power = 0, completion = 0;
    int n = 0;
  };
  std::map<Condition, std::map<int, Acc>> acc;
  for (const auto& r : runs) {
    auto& a = acc[r.condition][r.app_id];
    a.power += r.mean_power_w;
    a.completion += r.completion;
    ++a.n;
  }
  if (!acc.count(Condition::Baseline)) throw Error("missing_baseline", "overhead_report needs Baseline traces");
  const auto& base = acc.at(Condition::Baseline);
  OverheadReport report;
  for (const auto& [cond, apps] : acc) {
    OverheadEntry e;
    e.condition = cond;
    e.power_ratio = e.completion_ratio = 0.0;
    for (const auto& [app, a] : apps) {
      const auto it = base.find(app);
      if (it == base.end())
        throw Error("missing_baseline", "no Baseline trace for app " + std::to_string(app));
      const auto& b = it->second;
      e.power_ratio += (a.power / a.n) / (b.power / b.n);
      e.completion_ratio += (a.completion / a.n) / (b.completion / b.n);
      e.runs += a.n;
    }
    e.power_ratio /= static_cast<double>(apps.size());
    e.completion_ratio /= static_cast<double>(apps.size());
    report.entries.push_back(e);
  }
  return report;
}

OverheadReport overhead_report(const std::vector<PowerTrace>& traces, const std::vector<WorkloadSpec>& workloads,
                               const MachineProfile& profile, double k) {
  std::vector<RunDigest> runs;
  for (const auto& t : traces) {
    if (t.records.empty()) continue;
    const auto& r0 = t.records.front();
    const auto w = std::find_if(workloads.begin(), workloads.end(), [&](const auto& s) { return s.app_id == r0.app_id; });
    if (w == workloads.end()) throw Error("unknown_app", "trace references an unknown app");
    runs.push_back(digest(t, r0.condition, r0.app_id, r0.run_id, w->total_duration(), profile, k));
  }
  return overhead_report(runs);
}

ModelBundle design_loop(const MachineProfile& profile, std::uint64_t seed, const DesignOptions& options) {
  ModelBundle b;
  const auto id = identify_plant(profile, seed, options.identification_length);
  b.model = id.model;
  b.holdout_fit = id.holdout_fit;
  auto synth = SynthesisOptions::for_profile(profile);
  if (options.operating_point) synth.operating_point = *options.operating_point;
  synth.effort_penalty = options.effort_penalty;
  synth.integral_ratio = options.integral_ratio;
  b.controller = synthesize<double>(b.model, options.weights, options.deviation_bound, synth);
  b.spectral_radius = closed_loop_spectral_radius(b.controller, b.model);
  if (!(b.spectral_radius < 1.0))
    throw Error("unstable_loop", "synthesized closed loop is unstable on the nominal model");
  return b;
}

std::map<int, std::vector<std::vector<double>>> collect_measured(const std::vector<WorkloadSpec>& apps,
                                                                Condition condition, const MachineProfile& profile,
                                                                const ControllerMatricesD* ctrl, int runs, int length,
                                                                std::uint64_t seed, const MaskRanges& ranges,
                                                                int threads) {
  const std::size_t total = apps.size() * static_cast<std::size_t>(runs);
  std::vector<std::vector<double>> out(total);
  parallel_for(total, threads, [&](std::size_t i) {
    const auto& app = apps[i / static_cast<std::size_t>(runs)];
    const int run = static_cast<int>(i % static_cast<std::size_t>(runs));
    const std::uint64_t s = run_seed(seed, condition, app.app_id, run);
    std::optional<MaskProgram> mask;
    if (is_maya(condition)) mask = make_mask(condition, profile, s, ranges);
    out[i] = run_once(app, condition, profile, is_maya(condition) ? ctrl : nullptr, mask, s, length, run).measured();
  });
  std::map<int, std::vector<std::vector<double>>> by_app;
  for (std::size_t i = 0; i < total; ++i) by_app[apps[i / static_cast<std::size_t>(runs)].app_id].push_back(std::move(out[i]));
  return by_app;
}

}  // namespace maya
