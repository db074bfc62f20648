// Acceptance checks, one pass/fail line per criterion. Every threshold below is fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "maya/harness.hpp"
#include "maya/serialize.hpp"

using namespace maya;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr std::uint64_t kDesignSeed = 1;

const ModelBundle& loop() {
  static const ModelBundle b = design_loop(MachineProfile::sys1(), kDesignSeed);
  return b;
}

// 1. GaussianSinusoid tracking on every built-in workload.
Outcome tracking() {
  constexpr int kSeeds = 5, kLength = 5000;
  constexpr double kLimit = 0.10;
  const auto p = MachineProfile::sys1();
  double worst = 0.0;
  std::string where;
  for (const auto& w : builtin_suite(p))
    for (int s = 0; s < kSeeds; ++s) {
      const std::uint64_t seed = 1000 + s;
      const auto c = Condition::MayaGaussianSinusoid;
      const auto tr = run_once(w, c, p, &loop().controller, make_mask(c, p, seed), seed, kLength);
      const auto y = tr.measured(), r = tr.targets();
      double ss = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) ss += (r[i] - y[i]) * (r[i] - y[i]);
      const double range = *std::max_element(r.begin(), r.end()) - *std::min_element(r.begin(), r.end());
      const double ratio = std::sqrt(ss / double(y.size())) / range;
      if (ratio > worst) {
        worst = ratio;
        where = w.name + " seed " + std::to_string(seed);
      }
    }
  return {worst <= kLimit, fmt("worst RMS/range %.4f (%s), limit %.2f", worst, where.c_str(), kLimit)};
}

// 2. +/-40% gain corners.
Outcome robustness() {
  constexpr double kPerturbation = 0.40, kLimit = 0.15;
  const auto r = robustness_check(loop().controller, loop().model, kPerturbation);
  double radius = 0.0;
  for (const auto& c : r.corners) radius = std::max(radius, c.spectral_radius);
  return {r.all_stable && r.max_deviation <= kLimit,
          fmt("8 corners, all stable %s, max spectral radius %.4f, max deviation %.2e, limit %.2f",
              r.all_stable ? "yes" : "no", radius, r.max_deviation, kLimit)};
}

// 3. Exact recovery on noise-free ARX(4,4) data and holdout fit on the plant.
Outcome identification() {
  constexpr double kExact = 1e-6, kFit = 0.9;
  const double a[4] = {0.42, -0.18, 0.07, 0.03};
  const double b[4][3] = {{6.0, -0.11, 0.14}, {2.5, -0.04, 0.05}, {-0.8, 0.02, -0.03}, {0.3, -0.01, 0.02}};
  const double bias = 5.5;
  const int n = 800;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> f(1.2, 2.0), idle(0, 48), bal(0, 100);
  IdDatasetD d;
  d.inputs.resize(3, n);
  d.outputs.resize(n);
  for (int t = 0; t < n; ++t) d.inputs.col(t) << f(rng), idle(rng), bal(rng);
  for (int t = 0; t < n; ++t) {
    double y = bias;
    for (int i = 0; i < 4; ++i) y += t > i ? a[i] * d.outputs(t - 1 - i) : 0.0;
    for (int j = 0; j < 4; ++j)
      for (int c = 0; c < 3; ++c) y += b[j][c] * d.inputs(c, std::max(0, t - j));
    d.outputs(t) = y;
  }
  const auto m = fit_arx(d, 4, 4);
  double worst = std::abs(m.bias - bias) / std::abs(bias);
  for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(m.a(i) - a[i]) / std::abs(a[i]));
  for (int j = 0; j < 4; ++j)
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(m.b(c, j) - b[j][c]) / std::abs(b[j][c]));

  double min_fit = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    min_fit = std::min(min_fit, identify_plant(MachineProfile::sys1(), seed).holdout_fit);
  return {worst <= kExact && min_fit >= kFit,
          fmt("max relative coefficient error %.2e (limit %.0e), min holdout fit %.4f (limit %.2f)", worst, kExact,
              min_fit, kFit)};
}

// 4. Signal truth table.
Outcome truth_table() {
  constexpr int kSeeds = 10, kSamples = 16384;
  struct Row {
    MaskFamily f;
    bool v[4];
  };
  const Row rows[] = {{MaskFamily::Constant, {false, false, false, false}},
                      {MaskFamily::UniformRandom, {true, false, true, false}},
                      {MaskFamily::Gaussian, {true, true, true, false}},
                      {MaskFamily::Sinusoid, {true, true, false, true}},
                      {MaskFamily::GaussianSinusoid, {true, true, true, true}}};
  int mismatches = 0;
  std::string first;
  for (const auto& r : rows)
    for (int s = 0; s < kSeeds; ++s) {
      const auto g = spectral_signature(r.f, kSamples, 500 + s);
      const bool got[4] = {g.mean_changes, g.variance_changes, g.spread, g.peaks};
      if (!std::equal(got, got + 4, r.v)) {
        if (first.empty()) first = fmt(" first: %s seed %d", std::string(to_string(r.f)).c_str(), 500 + s);
        ++mismatches;
      }
    }
  return {mismatches == 0, fmt("%d of %d (family, seed) rows mismatch%s", mismatches, 5 * kSeeds, first.c_str())};
}

// 5. Attack gap on the desk-scale campaign.
Outcome attack_gap() {
  CampaignConfig cfg;
  cfg.conditions = {Condition::Baseline, Condition::NoisyBaseline, Condition::MayaConstant,
                    Condition::MayaGaussianSinusoid};
  cfg.runs_per_app = 100;
  cfg.trace_length = 2000;
  cfg.seed = 1;
  const auto r = run_campaign(cfg);
  const double chance = 1.0 / 8.0;
  auto adaptive = [&](Condition c) {
    for (const auto& a : r.attacks)
      if (a.condition == c) return a.test_accuracy;
    throw Error("missing_condition", "no attack result");
  };
  const double base = adaptive(Condition::Baseline);
  const double gs = adaptive(Condition::MayaGaussianSinusoid);
  const double constant = adaptive(Condition::MayaConstant);
  const bool pass = base >= 0.85 && gs <= chance + 0.10 && constant >= chance + 0.20 && r.failed_runs == 0;
  return {pass, fmt("baseline %.3f (>= 0.85), adaptive GS %.3f (<= %.3f), adaptive Constant %.3f (>= %.3f), "
                    "NoisyBaseline %.3f, failed runs %d",
                    base, gs, chance + 0.10, constant, chance + 0.20, adaptive(Condition::NoisyBaseline),
                    r.failed_runs)};
}

// 6. Backprop against central differences.
Outcome gradients() {
  constexpr double kLimit = 1e-4;
  double worst = 0.0;
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> width(4, 32);
  for (int k = 0; k < 10; ++k) {
    const int in = width(rng), classes = 2 + k % 7;
    MlpD net({in, width(rng), width(rng), classes}, 300 + k);
    for (auto& bvec : net.biases) bvec.setConstant(0.01);
    SampleVector s{Eigen::VectorXd::Zero(in), k % classes};
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < in; ++i) s.features(i) = g(rng);
    worst = std::max(worst, grad_check(net, s, 1e-5));
  }
  return {worst < kLimit, fmt("max relative error %.2e over 10 nets, limit %.0e", worst, kLimit)};
}

// 7. Change-point oracles and the GaussianSinusoid null result.
Outcome change_point_oracles() {
  constexpr int kTol = 2;
  std::mt19937_64 rng(31);
  int located = 0, total = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int at = 200 + 23 * trial;
    std::normal_distribution<double> lo(20.0, 1.0), hi(24.0, 1.0), calm(30.0, 0.5), wild(30.0, 8.0);
    std::vector<double> step(1000), var(1000);
    for (int t = 0; t < 1000; ++t) {
      step[t] = t < at ? lo(rng) : hi(rng);
      var[t] = t < at ? calm(rng) : wild(rng);
    }
    for (const auto* x : {&step, &var}) {
      const auto cp = change_points(*x);
      ++total;
      located += std::any_of(cp.boundaries.begin(), cp.boundaries.end(),
                             [&](Eigen::Index b) { return std::abs(b - at) <= kTol; });
    }
  }

  const auto p = MachineProfile::sys1();
  const auto apps = builtin_apps(p);
  auto score = [&](Condition c) {
    long detected = 0, hits = 0;
    double chance = 0.0;
    for (const auto& w : apps)
      for (int run = 0; run < 10; ++run) {
        const auto seed = run_seed(77, c, w.app_id, run);
        std::optional<MaskProgram> mask;
        if (is_maya(c)) mask = make_mask(c, p, seed);
        const int len = w.total_duration();
        const auto y = run_once(w, c, p, is_maya(c) ? &loop().controller : nullptr, mask, seed, len).measured();
        std::vector<Eigen::Index> truth;
        for (int bnd : w.phase_boundaries()) truth.push_back(bnd);
        const auto m = match_boundaries(change_points(y).boundaries, truth, 5, len);
        detected += m.detected;
        hits += m.hits;
        chance += m.detected * m.chance_rate;
      }
    return std::pair{detected ? double(hits) / detected : 0.0, detected ? chance / detected : 0.0};
  };
  const auto [gs_hit, gs_chance] = score(Condition::MayaGaussianSinusoid);
  const bool pass = located == total && gs_hit <= gs_chance;
  return {pass, fmt("synthetic %d/%d within +/-%d; GS hit fraction %.4f vs chance %.4f", located, total, kTol, gs_hit,
                    gs_chance)};
}

// 8. Averaging study.
Outcome averaging() {
  constexpr int kRuns = 30, kLong = 200000, kShort = 2000;
  const auto p = MachineProfile::sys1();
  const auto apps = builtin_apps(p);
  const auto gs = averaging_study(
      collect_measured(apps, Condition::MayaGaussianSinusoid, p, &loop().controller, kRuns, kLong, 5), "gs", kRuns);
  const auto nb =
      averaging_study(collect_measured(apps, Condition::NoisyBaseline, p, nullptr, kRuns, kShort, 5), "nb", kRuns);
  const double g = gs.max_median_gap / gs.pooled_iqr, n = nb.max_median_gap / nb.pooled_iqr;
  return {g <= 0.05 && n > 0.25,
          fmt("GS max median gap / pooled IQR %.4f (<= 0.05); NoisyBaseline %.4f (> 0.25)", g, n)};
}

// 9. Overheads.
Outcome overheads() {
  const auto p = MachineProfile::sys1();
  const auto apps = builtin_apps(p);
  std::vector<RunDigest> runs;
  for (Condition c : all_conditions())
    for (const auto& w : apps)
      for (int run = 0; run < 10; ++run) {
        const auto seed = run_seed(91, c, w.app_id, run);
        std::optional<MaskProgram> mask;
        if (is_maya(c)) mask = make_mask(c, p, seed);
        const auto tr = run_once(w, c, p, is_maya(c) ? &loop().controller : nullptr, mask, seed, 2000, run);
        runs.push_back(digest(tr, c, w.app_id, run, w.total_duration(), p));
      }
  const auto rep = overhead_report(runs);
  bool less = true;
  double max_power = 0.0;
  for (const auto& e : rep.entries)
    if (e.condition != Condition::Baseline) {
      less = less && e.power_ratio < 1.0;
      max_power = std::max(max_power, e.power_ratio);
    }
  const double sc = rep.at(Condition::MayaConstant).slowdown();
  const double sg = rep.at(Condition::MayaGaussianSinusoid).slowdown();
  return {less && sc >= sg, fmt("slowdown Constant %.3f >= GS %.3f; max defended power ratio %.3f (< 1)", sc, sg,
                                max_power)};
}

// 10. Determinism and trace format.
Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "maya_acceptance_determinism";
  std::filesystem::remove_all(root);
  CampaignConfig cfg;
  cfg.conditions = {Condition::Baseline, Condition::NoisyBaseline, Condition::MayaGaussianSinusoid};
  cfg.runs_per_app = 6;
  cfg.trace_length = 1000;
  cfg.averaging_min_runs = 6;
  cfg.attack.epochs = 5;
  cfg.write_traces = true;
  cfg.seed = 4;
  cfg.threads = 1;
  cfg.output_dir = root / "a";
  run_campaign(cfg);
  cfg.output_dir = root / "b";
  cfg.threads = 3;
  run_campaign(cfg);
  int differing = 0, files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(e.path(), root / "a");
    if (read_text_file(e.path()) != read_text_file(root / "b" / rel)) ++differing;
  }
  int roundtrip_bad = 0, traces = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root / "a" / "traces")) {
    if (!e.is_regular_file()) continue;
    ++traces;
    const auto text = read_text_file(e.path());
    if (format_trace(parse_trace(text)) != text) ++roundtrip_bad;
  }
  std::filesystem::remove_all(root);
  return {differing == 0 && roundtrip_bad == 0 && traces > 0,
          fmt("%d/%d artifact files differ across reruns; %d/%d traces fail the round trip", differing, files,
              roundtrip_bad, traces)};
}

}  // namespace

int main(int argc, char** argv) {
  bool fast = true, slow = true;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--fast")) slow = false;
    else if (!std::strcmp(argv[i], "--slow")) fast = false;
    else {
      std::fprintf(stderr, "usage: acceptance [--fast | --slow]\n");
      return 2;
    }
  }
  const std::vector<std::tuple<int, bool, std::function<Outcome()>>> criteria{
      {1, false, tracking},    {2, false, robustness}, {3, false, identification},       {4, false, truth_table},
      {5, true, attack_gap},   {6, false, gradients},  {7, false, change_point_oracles}, {8, true, averaging},
      {9, false, overheads},   {10, false, determinism}};
  int failed = 0;
  for (const auto& [id, is_slow, fn] : criteria) {
    if (is_slow ? !slow : !fast) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
