#include "maya/sysid.hpp"

#include <random>

namespace maya {

IdDatasetD excite(const MachineProfile& profile, const WorkloadSpec& workload, ExcitationKind,
                  int length, std::uint64_t seed, const ExcitationOptions& options) {
  const Eigen::Index min_length = 10 * (options.m + 3 * options.n);
  if (length < min_length)
    throw Error("insufficient_length",
                "excitation length must be >= " + std::to_string(min_length) + " samples");
  Rng rng(derive_seed(seed, 0x657863));
  PlantState plant = make_plant_state(profile, derive_seed(seed, 0x706c74));
  std::uniform_int_distribution<int> hold(options.hold_min, options.hold_max);
  const std::vector<double>* grids[3] = {&profile.dvfs_grid, &profile.idle_grid,
                                         &profile.balloon_grid};

  Eigen::Vector3d level;
  int remaining[3] = {0, 0, 0};
  IdDatasetD data;
  data.workload = workload.name;
  data.inputs.resize(3, length);
  data.outputs.resize(length);
  const int duration = workload.total_duration();
  for (int t = 0; t < length; ++t) {
    for (int k = 0; k < 3; ++k) {
      if (remaining[k] == 0) {
        const auto& g = *grids[k];
        level(k) = g[std::uniform_int_distribution<std::size_t>(0, g.size() - 1)(rng)];
        remaining[k] = hold(rng);
      }
      --remaining[k];
    }
    const ActuatorSetting setting = ActuatorSetting::from_vector(level);
    const double demand = demand_at(workload, t % duration, &rng);
    if (t == 0) prime_plant(plant, setting, demand, profile);
    data.inputs.col(t) = level;
    data.outputs(t) = step_plant(plant, setting, demand, profile);
  }
  return data;
}

IdentificationResult identify_plant(const MachineProfile& profile, std::uint64_t seed, int length,
                                    Eigen::Index m, Eigen::Index n) {
  const auto apps = builtin_apps(profile);
  ExcitationOptions opts;
  opts.m = m;
  opts.n = n;
  IdentificationResult result;
  std::vector<IdDatasetD> train, test;
  for (int which : {0, 2}) {
    auto d = excite(profile, apps[which], ExcitationKind::Staircase, length,
                    derive_seed(seed, 0x6964, which), opts);
    auto [head, tail] = split_dataset(d, 0.7);
    train.push_back(std::move(head));
    test.push_back(std::move(tail));
    result.datasets.push_back(std::move(d));
  }
  result.model = fit_arx<double>(train, m, n);
  double fit = 0;
  for (const auto& d : test) fit += fit_ratio(result.model, d);
  result.holdout_fit = fit / static_cast<double>(test.size());
  return result;
}

}  // namespace maya
