#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "maya/analysis.hpp"
#include "maya/workloads.hpp"
#include "support/oracles.hpp"

using namespace maya;

namespace {

WorkloadSpec single(PhaseSpec p) {
  WorkloadSpec w;
  w.phases = {p};
  return w;
}

}  // namespace

TEST_CASE("constant phase without noise is constant") {
  const auto w = single({30, 0, std::nullopt, 0, 100});
  for (int t = 0; t < 100; ++t) CHECK(demand_at(w, t, nullptr) == 30.0);
  Rng rng(1);
  for (int t = 0; t < 100; ++t) CHECK(demand_at(w, t, &rng) == 30.0);
}

TEST_CASE("looping phase is exactly periodic") {
  const auto w = single({40, 0, 50, 5, 400});
  for (int t = 0; t + 50 < 400; ++t) CHECK(demand_at(w, t, nullptr) == doctest::Approx(demand_at(w, t + 50, nullptr)).epsilon(1e-12));
}

TEST_CASE("demand_at rejects indexes outside the workload") {
  const auto w = single({40, 0, 50, 5, 400});
  CHECK_THROWS_AS(demand_at(w, 400, nullptr), Error);
  CHECK_THROWS_AS(demand_at(w, -1, nullptr), Error);
}

TEST_CASE("same seed gives the same noisy demand") {
  const auto w = builtin_apps(MachineProfile::sys1())[3];
  Rng a(5), b(5), c(6);
  bool differs = false;
  for (int t = 0; t < w.total_duration(); ++t) {
    const double x = demand_at(w, t, &a);
    CHECK(x == demand_at(w, t, &b));
    differs = differs || x != demand_at(w, t, &c);
  }
  CHECK(differs);
}

TEST_CASE("suite has eight apps and three videos inside [0, tdp]") {
  const auto p = MachineProfile::sys1();
  const auto suite = builtin_suite(p);
  CHECK(builtin_apps(p).size() == 8);
  CHECK(builtin_videos(p).size() == 3);
  CHECK(suite.size() == 11);
  Rng rng(3);
  for (const auto& w : suite) {
    CHECK_NOTHROW(w.validate());
    for (int t = 0; t < w.total_duration(); ++t) {
      const double d = demand_at(w, t, &rng);
      CHECK(d >= 0.0);
      CHECK(d <= p.tdp_w);
    }
    int total = 0;
    for (const auto& ph : w.phases) {
      total += ph.duration;
      CHECK(ph.duration >= 100);
      CHECK(ph.duration <= 2400);
    }
    CHECK(total == w.total_duration());
  }
}

TEST_CASE("apps are pairwise distinguishable") {
  const auto apps = builtin_apps(MachineProfile::sys1());
  for (std::size_t i = 0; i < apps.size(); ++i)
    for (std::size_t j = i + 1; j < apps.size(); ++j) {
      INFO("apps " << i << " and " << j);
      // Independent check of the rule: mean gap >= 2 W or loop-period gap >= 10 samples.
      const double gap = std::abs(oracle::mean(noise_free_demand(apps[i])) - oracle::mean(noise_free_demand(apps[j])));
      const int pgap = std::abs(*apps[i].dominant_loop_period() - *apps[j].dominant_loop_period());
      CHECK((gap >= 2.0 || pgap >= 10));
      CHECK(distinguishable(apps[i], apps[j]));
    }
}

TEST_CASE("video frame pattern repeats across runs but differs between videos") {
  const auto videos = builtin_videos(MachineProfile::sys1());
  const auto a = noise_free_demand(videos[0]);
  CHECK(a == noise_free_demand(videos[0]));
  CHECK(a != noise_free_demand(videos[1]));
}

TEST_CASE("dominant spectral peak of each app sits at its longest loop") {
  const auto apps = builtin_apps(MachineProfile::sys1());
  for (const auto& w : apps) {
    const auto d = noise_free_demand(w);
    // Oracle: brute-force DFT argmax over the padded, mean-removed signal.
    std::size_t n = 1;
    while (n < d.size()) n <<= 1;
    std::vector<double> x(n, 0.0);
    const double m = oracle::mean(d);
    for (std::size_t i = 0; i < d.size(); ++i) x[i] = d[i] - m;
    const auto mag = oracle::dft_magnitude(x);
    const auto best = std::max_element(mag.begin() + 1, mag.end()) - mag.begin();
    const double expected = double(n) / *w.dominant_loop_period();
    INFO("app " << w.app_id);
    CHECK(std::abs(double(best) - expected) <= 1.0);
    const auto s = fft_magnitude(d);
    const auto peaks = detect_peaks(s, 2.0);
    REQUIRE_FALSE(peaks.empty());
    CHECK(peaks.front().bin == best);
  }
}

TEST_CASE("phase boundaries of the noise-free apps are recoverable within 2 samples") {
  const auto apps = builtin_apps(MachineProfile::sys1());
  for (const auto& w : apps) {
    const auto d = noise_free_demand(w);
    const auto truth = w.phase_boundaries();
    for (double k : {3.0, 6.0, 10.0}) {
      const auto r = change_points(d, k * std::log(double(d.size())), 50);
      INFO("app " << w.app_id << " penalty factor " << k);
      REQUIRE(r.boundaries.size() == truth.size());
      for (std::size_t i = 0; i < truth.size(); ++i) CHECK(std::abs(r.boundaries[i] - truth[i]) <= 2);
    }
  }
}

TEST_CASE("workload validation") {
  WorkloadSpec w = single({90, 0, 20, 10, 10});
  CHECK_THROWS_AS(w.validate(), Error);
  w = single({30, 0, 1, 1, 10});
  CHECK_THROWS_AS(w.validate(), Error);
  w = single({30, 0, std::nullopt, 0, 0});
  CHECK_THROWS_AS(w.validate(), Error);
  w.phases.clear();
  CHECK_THROWS_AS(w.validate(), Error);
}
