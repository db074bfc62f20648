#include "maya/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

namespace maya {

int WorkloadSpec::total_duration() const {
  return std::accumulate(phases.begin(), phases.end(), 0,
                         [](int acc, const PhaseSpec& p) { return acc + p.duration; });
}

std::vector<int> WorkloadSpec::phase_boundaries() const {
  std::vector<int> out;
  int start = 0;
  for (std::size_t i = 0; i + 1 < phases.size(); ++i) {
    start += phases[i].duration;
    out.push_back(start);
  }
  return out;
}

std::optional<int> WorkloadSpec::dominant_loop_period() const {
  std::map<int, int> coverage;
  for (const auto& p : phases)
    if (p.loop_period) coverage[*p.loop_period] += p.duration;
  if (coverage.empty()) return std::nullopt;
  return std::max_element(coverage.begin(), coverage.end(),
                          [](const auto& a, const auto& b) { return a.second < b.second; })
      ->first;
}

void WorkloadSpec::validate() const {
  auto fail = [this](const std::string& what) {
    throw Error("invalid_workload", "workload " + std::to_string(app_id) + ": " + what);
  };
  if (phases.empty()) fail("phases must be non-empty");
  for (const auto& p : phases) {
    if (p.duration < 1) fail("phase duration must be >= 1");
    if (p.loop_period && *p.loop_period < 2) fail("loop_period must be >= 2");
    if (p.demand_sigma_w < 0 || p.loop_amp_w < 0 || p.frame_jitter_w < 0)
      fail("sigma, amplitude and jitter must be non-negative");
    const double swing = p.loop_amp_w + p.frame_jitter_w;
    if (p.mean_demand_w - swing < 0 || p.mean_demand_w + swing > max_demand_w)
      fail("mean_demand +/- loop_amp must lie in [0, tdp]");
  }
}

double demand_at(const WorkloadSpec& spec, int t, Rng* rng) {
  if (t < 0 || t >= spec.total_duration())
    throw Error("out_of_range", "sample index " + std::to_string(t) + " outside workload");
  int start = 0;
  const PhaseSpec* phase = &spec.phases.front();
  for (const auto& p : spec.phases) {
    phase = &p;
    if (t < start + p.duration) break;
    start += p.duration;
  }
  double d = phase->mean_demand_w;
  if (phase->loop_period) {
    const int period = *phase->loop_period;
    d += phase->loop_amp_w * std::sin(2.0 * std::numbers::pi * t / period);
    if (phase->frame_jitter_w > 0)
      d += phase->frame_jitter_w * hashed_unit(spec.content_seed, static_cast<std::uint64_t>(t / period));
  }
  if (rng && phase->demand_sigma_w > 0)
    d += std::normal_distribution<double>(0.0, phase->demand_sigma_w)(*rng);
  return std::clamp(d, 0.0, spec.max_demand_w);
}

std::vector<double> noise_free_demand(const WorkloadSpec& spec) {
  std::vector<double> out(spec.total_duration());
  for (int t = 0; t < static_cast<int>(out.size()); ++t) out[t] = demand_at(spec, t, nullptr);
  return out;
}

namespace {

PhaseSpec loop(double mean, double sigma, int period, double amp, int duration) {
  return {mean, sigma, period, amp, duration, 0.0};
}

PhaseSpec flat(double mean, double sigma, int duration) {
  return {mean, sigma, std::nullopt, 0.0, duration, 0.0};
}

}  // namespace

std::vector<WorkloadSpec> builtin_apps(const MachineProfile& profile) {
  // Loop boundaries line up with whole periods so phase edges stay sharp.
  std::vector<std::vector<PhaseSpec>> phases = {
      {loop(34, 1.0, 40, 14, 400), loop(48, 1.5, 40, 16, 1180), loop(36, 1.0, 40, 14, 400),
       flat(26, 0.8, 400)},
      {loop(50, 1.5, 24, 12, 780), loop(38, 1.2, 40, 10, 540), loop(50, 1.5, 24, 12, 1000)},
      {loop(40, 1.2, 30, 12, 1200), flat(54, 1.5, 285), loop(40, 1.2, 30, 12, 900)},
      {loop(58, 2.0, 20, 10, 990), loop(46, 1.5, 20, 10, 590), loop(58, 2.0, 20, 10, 800)},
      {loop(36, 1.0, 50, 14, 1200), loop(50, 1.5, 50, 12, 375), loop(36, 1.0, 50, 14, 800)},
      {loop(46, 1.5, 60, 18, 570), loop(34, 1.0, 60, 14, 570), loop(46, 1.5, 60, 18, 600),
       flat(56, 2.0, 500)},
      {loop(47, 1.5, 44, 15, 1430), loop(30, 1.0, 20, 8, 550), loop(47, 1.5, 44, 15, 450)},
      {loop(32, 1.0, 32, 14, 480), loop(42, 1.2, 32, 16, 960), loop(52, 2.0, 32, 16, 960)},
  };
  const char* names[] = {"blackscholes_like", "bodytrack_like", "canneal_like", "fluidanimate_like",
                         "freqmine_like",     "radix_like",     "raytrace_like", "water_like"};
  std::vector<WorkloadSpec> out;
  for (int i = 0; i < static_cast<int>(phases.size()); ++i) {
    WorkloadSpec w;
    w.app_id = i;
    w.name = names[i];
    w.phases = phases[i];
    w.max_demand_w = profile.tdp_w;
    w.content_seed = derive_seed(0x61707073, i);
    w.validate();
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<WorkloadSpec> builtin_videos(const MachineProfile& profile) {
  struct Video {
    const char* name;
    double mean;
    int frame_period;
    double amp;
    double jitter;
  };
  const Video videos[] = {{"video_city", 48, 24, 10, 6},
                          {"video_nature", 44, 30, 8, 8},
                          {"video_sports", 52, 40, 12, 5}};
  std::vector<WorkloadSpec> out;
  for (int i = 0; i < 3; ++i) {
    const auto& v = videos[i];
    WorkloadSpec w;
    w.app_id = i;
    w.name = v.name;
    w.kind = WorkloadKind::Video;
    PhaseSpec p = loop(v.mean, 1.2, v.frame_period, v.amp, 2400);
    p.frame_jitter_w = v.jitter;
    w.phases = {p};
    w.max_demand_w = profile.tdp_w;
    w.content_seed = derive_seed(0x766964656f, i);
    w.validate();
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<WorkloadSpec> builtin_suite(const MachineProfile& profile) {
  auto out = builtin_apps(profile);
  for (auto& v : builtin_videos(profile)) out.push_back(std::move(v));
  return out;
}

bool distinguishable(const WorkloadSpec& a, const WorkloadSpec& b) {
  auto mean = [](const WorkloadSpec& w) {
    const auto d = noise_free_demand(w);
    return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  };
  if (std::abs(mean(a) - mean(b)) >= 2.0) return true;
  const auto pa = a.dominant_loop_period();
  const auto pb = b.dominant_loop_period();
  if (pa.has_value() != pb.has_value()) return true;
  return pa && std::abs(*pa - *pb) >= 10;
}

}  // namespace maya
