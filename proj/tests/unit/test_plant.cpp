#include "doctest.h"

#include <cmath>

#include "maya/plant.hpp"

using namespace maya;

namespace {

MachineProfile quiet() {
  auto p = MachineProfile::sys1();
  p.noise_sigma_w = 0.0;
  return p;
}

// Value reached after many identical steps, noise off.
double settled(const ActuatorSetting& s, double demand, const MachineProfile& p) {
  PlantState st = make_plant_state(p, 1, false);
  double y = 0;
  for (int i = 0; i < 200; ++i) y = step_plant(st, s, demand, p);
  return y;
}

}  // namespace

TEST_CASE("sys1 grids match the documented actuator ranges") {
  const auto p = MachineProfile::sys1();
  CHECK(p.dvfs_grid.size() == 9);
  CHECK(p.idle_grid.size() == 13);
  CHECK(p.balloon_grid.size() == 11);
  CHECK(p.dvfs_grid.front() == doctest::Approx(1.2));
  CHECK(p.dvfs_grid.back() == doctest::Approx(2.0));
  CHECK(p.idle_grid.back() == doctest::Approx(48.0));
  CHECK(p.balloon_grid.back() == doctest::Approx(100.0));
  CHECK(MachineProfile::sys2().dvfs_grid.size() == 15);
  CHECK_NOTHROW(p.validate());
  CHECK_NOTHROW(MachineProfile::sys2().validate());
}

TEST_CASE("profile validation rejects bad values") {
  auto p = MachineProfile::sys1();
  p.tdp_w = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = MachineProfile::sys1();
  p.dvfs_grid = {1.2, 1.2, 1.3};
  CHECK_THROWS_AS(p.validate(), Error);
  p = MachineProfile::sys1();
  p.resolution_w = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("full idle, no balloon, no demand settles at base power times the lowest scale") {
  const auto p = quiet();
  const ActuatorSetting s{1.2, 48, 0};
  const double expected = p.base_idle_w;  // demand 0 removes every scaled term
  CHECK(settled(s, 0.0, p) == doctest::Approx(expected).epsilon(1e-9));
  // With demand the scale enters: base + (1.2/2.0)^2 * 40 * 0.52.
  CHECK(settled(s, 40.0, p) == doctest::Approx(4.0 + 0.36 * 40 * 0.52).epsilon(1e-3));
}

TEST_CASE("higher DVFS gives more power") {
  const auto p = quiet();
  CHECK(settled({2.0, 0, 0}, 30, p) > settled({1.2, 0, 0}, 30, p));
}

TEST_CASE("pre-noise power is monotone over the full actuator grid") {
  const auto p = quiet();
  for (double demand : {0.0, 25.0, 60.0}) {
    const auto& F = p.dvfs_grid;
    const auto& I = p.idle_grid;
    const auto& B = p.balloon_grid;
    for (std::size_t f = 0; f < F.size(); ++f)
      for (std::size_t i = 0; i < I.size(); ++i)
        for (std::size_t b = 0; b < B.size(); ++b) {
          const double here = static_power({F[f], I[i], B[b]}, demand, p);
          if (f + 1 < F.size()) CHECK(static_power({F[f + 1], I[i], B[b]}, demand, p) >= here);
          if (i + 1 < I.size()) CHECK(static_power({F[f], I[i + 1], B[b]}, demand, p) <= here);
          if (b + 1 < B.size()) CHECK(static_power({F[f], I[i], B[b + 1]}, demand, p) >= here);
        }
  }
}

TEST_CASE("measured power stays in [0, tdp] and on the resolution grid") {
  auto p = MachineProfile::sys1();
  p.noise_sigma_w = 3.0;
  PlantState st = make_plant_state(p, 42);
  for (int t = 0; t < 2000; ++t) {
    const ActuatorSetting s{p.dvfs_grid[t % 9], p.idle_grid[(t / 9) % 13], p.balloon_grid[(t / 7) % 11]};
    const double y = step_plant(st, s, (t % 5) * 23.0, p);
    REQUIRE(y >= 0.0);
    REQUIRE(y <= p.tdp_w);
    CHECK(std::abs(y / p.resolution_w - std::round(y / p.resolution_w)) < 1e-6);
    CHECK_FALSE(std::signbit(y));
  }
}

TEST_CASE("identical seeds give identical traces") {
  const auto p = MachineProfile::sys1();
  PlantState a = make_plant_state(p, 9), b = make_plant_state(p, 9);
  for (int t = 0; t < 500; ++t) CHECK(step_plant(a, {1.6, 8, 30}, 30, p) == step_plant(b, {1.6, 8, 30}, 30, p));
}

TEST_CASE("off-grid settings and bad demand are rejected") {
  const auto p = MachineProfile::sys1();
  PlantState st = make_plant_state(p, 1);
  CHECK_THROWS_AS(step_plant(st, {1.65, 0, 0}, 10, p), Error);
  CHECK_THROWS_AS(step_plant(st, {1.6, 5, 0}, 10, p), Error);
  CHECK_THROWS_AS(step_plant(st, {1.6, 4, 15}, 10, p), Error);
  CHECK_THROWS_AS(step_plant(st, {1.6, 4, 10}, -1, p), Error);
  CHECK_THROWS_AS(step_plant(st, {1.6, 4, 10}, 200, p), Error);
}

TEST_CASE("step response settles within the documented number of periods") {
  const auto p = quiet();
  const int k = p.settle_periods(0.02);
  PlantState st = make_plant_state(p, 1, false);
  prime_plant(st, {1.2, 48, 0}, 10, p);
  const double start = st.thermal_lag_w;
  const double target = static_power({2.0, 0, 100}, 10, p);
  double y = 0;
  for (int i = 0; i < k; ++i) y = step_plant(st, {2.0, 0, 100}, 10, p);
  CHECK(std::abs(y - target) <= 0.02 * std::abs(target - start) + p.resolution_w);
  CHECK(k <= 10);
}

TEST_CASE("quantize_setting rounds to the nearest grid point") {
  const auto p = MachineProfile::sys1();
  CHECK(quantize_setting({1.649, 2.1, 94.9}, p) == ActuatorSetting{1.6, 4, 90});
  CHECK(quantize_setting({9.9, -5, 300}, p) == ActuatorSetting{2.0, 0, 100});
  CHECK(quantize_setting({1.25, 2.0, 5.0}, p) == ActuatorSetting{1.2, 0, 0});
  CHECK(quantize_setting({NAN, 47, 99}, p) == ActuatorSetting{1.2, 48, 100});
  for (double v = 1.0; v < 2.2; v += 0.013) {
    const double q = quantize_setting({v, 0, 0}, p).dvfs_ghz;
    double best = 1e9;
    for (double g : p.dvfs_grid) best = std::min(best, std::abs(g - std::clamp(v, 1.2, 2.0)));
    CHECK(std::abs(q - std::clamp(v, 1.2, 2.0)) == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("profile hash depends on content") {
  auto a = MachineProfile::sys1();
  auto b = a;
  CHECK(a.hash() == b.hash());
  b.noise_sigma_w = 0.3;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
}
