#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "maya/attack.hpp"
#include "maya/harness.hpp"
#include "parallel.hpp"

namespace maya {
namespace {

// Rounded so summaries print identically on every run.
double fixed(double x, double scale = 1e6) {
  if (!std::isfinite(x)) return x;
  return std::round(x * scale) / scale + 0.0;
}

std::string csv_matrix(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%s%.6f", j ? "," : "", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Json matrix_rows(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(fixed(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

// True phase boundaries of a workload replayed over `length` samples.
std::vector<Eigen::Index> replayed_boundaries(const WorkloadSpec& w, int length) {
  std::vector<Eigen::Index> out;
  const int duration = w.total_duration();
  for (int cycle = 0; cycle * duration < length; ++cycle) {
    if (cycle > 0) out.push_back(cycle * duration);
    for (int b : w.phase_boundaries())
      if (cycle * duration + b < length) out.push_back(cycle * duration + b);
  }
  return out;
}

Json stats_json(const AveragingStats& s) {
  Json outliers = Json::array();
  for (double v : s.outliers) outliers.push_back(fixed(v));
  return Json{{"app_id", s.app_id},         {"median", fixed(s.median)},         {"q25", fixed(s.q25)},
              {"q75", fixed(s.q75)},        {"whisker_lo", fixed(s.whisker_lo)}, {"whisker_hi", fixed(s.whisker_hi)},
              {"mean", fixed(s.mean)},      {"variance", fixed(s.variance)},     {"outlier_count", s.outliers.size()},
              {"outliers", outliers}};
}

}  // namespace

void CampaignConfig::validate() const {
  profile.validate();
  if (runs_per_app < 1) throw Error("invalid_config", "runs_per_app must be >= 1");
  if (trace_length < 10) throw Error("invalid_config", "trace_length must be >= 10");
  if (conditions.empty()) throw Error("invalid_config", "conditions must be non-empty");
  if (attack.segment_length <= 0 || attack.segment_length % kBlock != 0)
    throw Error("invalid_config", "segment_length must be a positive multiple of 5");
  mask_ranges.validate();
  std::set<int> known;
  for (const auto& w : workloads.empty() ? builtin_apps(profile) : workloads) known.insert(w.app_id);
  for (int a : apps)
    if (!known.count(a)) throw Error("invalid_config", "unknown app " + std::to_string(a));
}

Json to_json(const CampaignConfig& c) {
  Json conds = Json::array();
  for (auto cond : c.conditions) conds.push_back(std::string(to_string(cond)));
  return Json{{"profile", to_json(c.profile)},
              {"conditions", conds},
              {"apps", c.apps},
              {"workloads", to_json(c.workloads)},
              {"runs_per_app", c.runs_per_app},
              {"trace_length", c.trace_length},
              {"seed", c.seed},
              {"attack",
               {{"segment_length", c.attack.segment_length},
                {"hidden", c.attack.hidden},
                {"epochs", c.attack.epochs},
                {"learn_rate", c.attack.learn_rate},
                {"batch_size", c.attack.batch_size},
                {"momentum", c.attack.momentum}}},
              {"design",
               {{"weights", {c.design.weights(0), c.design.weights(1), c.design.weights(2)}},
                {"deviation_bound", c.design.deviation_bound},
                {"identification_length", c.design.identification_length}}},
              {"mask_ranges", to_json(c.mask_ranges)},
              {"balloon_interference", c.balloon_interference},
              {"averaging_min_runs", c.averaging_min_runs},
              {"write_traces", c.write_traces}};
}

CampaignConfig campaign_from_json(const Json& j) {
  try {
    CampaignConfig c;
    if (j.contains("profile")) {
      c.profile = j.at("profile").is_string() ? load_profile(j.at("profile").get<std::string>())
                                              : profile_from_json(j.at("profile"));
    }
    if (j.contains("conditions")) {
      c.conditions.clear();
      for (const auto& s : j.at("conditions")) c.conditions.push_back(parse_condition(s.get<std::string>()));
    }
    c.apps = j.value("apps", c.apps);
    if (j.contains("workloads")) c.workloads = workloads_from_json(j.at("workloads"));
    c.runs_per_app = j.value("runs_per_app", c.runs_per_app);
    c.trace_length = j.value("trace_length", c.trace_length);
    c.seed = j.value("seed", c.seed);
    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      c.attack.segment_length = a.value("segment_length", c.attack.segment_length);
      c.attack.hidden = a.value("hidden", c.attack.hidden);
      c.attack.epochs = a.value("epochs", c.attack.epochs);
      c.attack.learn_rate = a.value("learn_rate", c.attack.learn_rate);
      c.attack.batch_size = a.value("batch_size", c.attack.batch_size);
      c.attack.momentum = a.value("momentum", c.attack.momentum);
    }
    if (j.contains("design")) {
      const auto& d = j.at("design");
      if (d.contains("weights")) {
        const auto w = d.at("weights").get<std::vector<double>>();
        if (w.size() != 3) throw Error("invalid_config", "design.weights needs 3 entries");
        c.design.weights = {w[0], w[1], w[2]};
      }
      c.design.deviation_bound = d.value("deviation_bound", c.design.deviation_bound);
      c.design.identification_length = d.value("identification_length", c.design.identification_length);
    }
    if (j.contains("mask_ranges")) c.mask_ranges = mask_ranges_from_json(j.at("mask_ranges"));
    c.balloon_interference = j.value("balloon_interference", c.balloon_interference);
    c.averaging_min_runs = j.value("averaging_min_runs", c.averaging_min_runs);
    c.threads = j.value("threads", c.threads);
    c.write_traces = j.value("write_traces", c.write_traces);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    throw Error("invalid_config", std::string("malformed campaign config: ") + e.what());
  }
}

CampaignResult run_campaign(const CampaignConfig& config) {
  config.validate();
  const auto& profile = config.profile;
  std::vector<WorkloadSpec> apps;
  for (auto& w : config.workloads.empty() ? builtin_apps(profile) : config.workloads)
    if (config.apps.empty() || std::count(config.apps.begin(), config.apps.end(), w.app_id)) apps.push_back(w);
  const int n_apps = static_cast<int>(apps.size());
  const bool any_maya = std::any_of(config.conditions.begin(), config.conditions.end(), is_maya);
  const auto& out_dir = config.output_dir;
  const bool write = !out_dir.empty();

  CampaignResult result;
  Json summary;
  summary["profile_hash"] = profile.hash();
  summary["seed"] = config.seed;
  summary["apps"] = n_apps;
  summary["runs_per_app"] = config.runs_per_app;
  summary["trace_length"] = config.trace_length;

  std::optional<ModelBundle> loop;
  if (any_maya) {
    loop = design_loop(profile, derive_seed(config.seed, 0x646573), config.design);
    summary["design"] = Json{{"holdout_fit", fixed(loop->holdout_fit)},
                             {"state_dim", loop->controller.state_dim()},
                             {"closed_loop_spectral_radius", fixed(loop->spectral_radius)}};
    if (write) {
      write_json_file(out_dir / "model.json", to_json(loop->model));
      write_json_file(out_dir / "controller.json", to_json(loop->controller));
    }
  }

  // Every run is independent; slots are filled by index so order never depends on threads.
  struct Job {
    Condition condition;
    int app;  // index into apps
    int run;
  };
  std::vector<Job> jobs;
  for (auto c : config.conditions)
    for (int a = 0; a < n_apps; ++a)
      for (int r = 0; r < config.runs_per_app; ++r) jobs.push_back({c, a, r});
  std::vector<std::optional<RunDigest>> digests(jobs.size());
  std::vector<std::string> manifest(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto& app = apps[job.app];
    const std::uint64_t seed = run_seed(config.seed, job.condition, app.app_id, job.run);
    char line[256];
    try {
      std::optional<MaskProgram> mask;
      if (is_maya(job.condition)) mask = make_mask(job.condition, profile, seed, config.mask_ranges);
      const auto trace = run_once(app, job.condition, profile, is_maya(job.condition) ? &loop->controller : nullptr,
                                  mask, seed, config.trace_length, job.run);
      const std::string text = format_trace(trace);
      std::string path;
      if (write && config.write_traces) {
        path = "traces/" + std::string(to_string(job.condition)) + "/app" + std::to_string(app.app_id) + "_run" +
               std::to_string(job.run) + ".csv";
        write_text_file(out_dir / path, text);
      }
      digests[i] = digest(trace, job.condition, app.app_id, job.run, app.total_duration(), profile,
                          config.balloon_interference);
      std::snprintf(line, sizeof line, "%s,%d,%d,%llu,%s,ok,%s", std::string(to_string(job.condition)).c_str(),
                    app.app_id, job.run, static_cast<unsigned long long>(seed), fnv1a_hex(text).c_str(), path.c_str());
    } catch (const Error& e) {
      std::snprintf(line, sizeof line, "%s,%d,%d,%llu,,failed:%s,", std::string(to_string(job.condition)).c_str(),
                    app.app_id, job.run, static_cast<unsigned long long>(seed), e.code().c_str());
    }
    manifest[i] = line;
  });
  for (auto& d : digests) {
    if (d) result.runs.push_back(std::move(*d));
    else ++result.failed_runs;
  }
  summary["failed_runs"] = result.failed_runs;
  if (write) {
    std::string text = "condition,app_id,run_id,seed,trace_hash,status,trace_file\n";
    for (const auto& l : manifest) text += l + "\n";
    write_text_file(out_dir / "manifest.csv", text);
    write_json_file(out_dir / "config.json", to_json(config));
  }

  auto runs_of = [&](Condition c) {
    std::vector<const RunDigest*> out;
    for (const auto& r : result.runs)
      if (r.condition == c) out.push_back(&r);
    return out;
  };
  auto label_of = [&](int app_id) {
    for (int a = 0; a < n_apps; ++a)
      if (apps[a].app_id == app_id) return a;
    return -1;
  };

  // Attacks: adaptive per condition, plus transfer from the reference (noisy) baseline model.
  Json attacks = Json::object();
  const Condition reference = std::count(config.conditions.begin(), config.conditions.end(), Condition::NoisyBaseline)
                                  ? Condition::NoisyBaseline
                                  : Condition::Baseline;
  std::map<Condition, std::vector<SampleVector>> samples;
  std::map<Condition, TrainReport> reports;
  for (auto c : config.conditions) {
    auto& set = samples[c];
    for (const auto* r : runs_of(c)) {
      auto s = preprocess(r->measured, label_of(r->app_id), config.attack.segment_length, 0.0, profile.tdp_w);
      set.insert(set.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
  }
  auto trainable = [&](Condition c) {
    std::vector<int> count(n_apps, 0);
    for (const auto& s : samples[c]) ++count[s.label];
    return n_apps >= 2 && std::all_of(count.begin(), count.end(), [](int k) { return k >= 3; });
  };
  for (auto c : config.conditions) {
    if (!trainable(c)) {
      attacks[std::string(to_string(c))] = Json{{"skipped", "too few samples per class"}};
      continue;
    }
    std::vector<int> sizes{config.attack.segment_length / kBlock * kQuantLevels};
    sizes.insert(sizes.end(), config.attack.hidden.begin(), config.attack.hidden.end());
    sizes.push_back(n_apps);
    TrainOptions opt;
    opt.epochs = config.attack.epochs;
    opt.learn_rate = config.attack.learn_rate;
    opt.batch_size = config.attack.batch_size;
    opt.momentum = config.attack.momentum;
    opt.seed = derive_seed(config.seed, 0x747261696e, static_cast<std::uint64_t>(c));
    reports.emplace(c, train(MlpD(sizes, derive_seed(opt.seed, 9)), samples[c], opt));
  }
  for (auto c : config.conditions) {
    if (!reports.count(c)) continue;
    const auto& rep = reports.at(c);
    AttackResult a;
    a.condition = c;
    a.train_accuracy = rep.train_accuracy;
    a.validation_accuracy = rep.validation_accuracy;
    a.test_accuracy = rep.test_accuracy;
    std::vector<SampleVector> test;
    for (auto i : rep.split.test) test.push_back(samples[c][i]);
    a.adaptive_confusion = confusion(rep.model, test, n_apps);
    Json entry{{"train_accuracy", fixed(a.train_accuracy)},
               {"validation_accuracy", fixed(a.validation_accuracy)},
               {"test_accuracy", fixed(a.test_accuracy)},
               {"samples", samples[c].size()},
               {"adaptive_confusion", matrix_rows(a.adaptive_confusion)}};
    if (reports.count(reference)) {
      const auto& ref = reports.at(reference).model;
      a.transfer_accuracy = accuracy(ref, test);
      a.transfer_confusion = confusion(ref, test, n_apps);
      entry["transfer_from"] = std::string(to_string(reference));
      entry["transfer_accuracy"] = fixed(a.transfer_accuracy);
      entry["transfer_confusion"] = matrix_rows(a.transfer_confusion);
    }
    if (write) {
      write_text_file(out_dir / "confusion" / (std::string(to_string(c)) + "_adaptive.csv"), csv_matrix(a.adaptive_confusion));
      if (a.transfer_confusion.size())
        write_text_file(out_dir / "confusion" / (std::string(to_string(c)) + "_transfer.csv"), csv_matrix(a.transfer_confusion));
    }
    attacks[std::string(to_string(c))] = entry;
    result.attacks.push_back(std::move(a));
  }
  summary["chance"] = fixed(n_apps ? 1.0 / n_apps : 0.0);
  summary["attacks"] = attacks;

  // Signal averaging.
  Json averaging = Json::object();
  for (auto c : config.conditions) {
    const std::string name(to_string(c));
    if (config.runs_per_app < config.averaging_min_runs) {
      averaging[name] = Json{{"skipped", "fewer runs than averaging_min_runs"}};
      continue;
    }
    std::map<int, std::vector<std::vector<double>>> by_app;
    for (const auto* r : runs_of(c)) by_app[r->app_id].push_back(r->measured);
    try {
      auto study = averaging_study(by_app, name, config.averaging_min_runs);
      Json per_app = Json::array();
      for (const auto& s : study.per_app) per_app.push_back(stats_json(s));
      averaging[name] = Json{{"runs", study.runs},
                             {"pooled_iqr", fixed(study.pooled_iqr)},
                             {"max_median_gap", fixed(study.max_median_gap)},
                             {"gap_over_iqr", fixed(study.max_median_gap / study.pooled_iqr)},
                             {"per_app", per_app}};
      result.averaging.emplace(c, std::move(study));
    } catch (const Error& e) {
      averaging[name] = Json{{"skipped", e.what()}};
    }
  }
  summary["averaging"] = averaging;

  // Change points against the true phase boundaries, +/- 5 samples.
  Json cps = Json::object();
  for (auto c : config.conditions) {
    long detected = 0, hits = 0, length = 0;
    double weighted_chance = 0.0, boundary_chance = 0.0;
    int traces = 0;
    for (const auto* r : runs_of(c)) {
      const auto& w = apps[label_of(r->app_id)];
      const int len = static_cast<int>(r->measured.size());
      const auto truth = replayed_boundaries(w, len);
      const auto report = change_points(r->measured);
      const auto m = match_boundaries(report.boundaries, truth, 5, len);
      detected += m.detected;
      hits += m.hits;
      length += len;
      weighted_chance += m.detected * m.chance_rate;
      boundary_chance += static_cast<double>(truth.size()) * 11.0 / len;
      ++traces;
    }
    cps[std::string(to_string(c))] =
        Json{{"traces", traces},
             {"detected", detected},
             {"hits", hits},
             {"hit_fraction", fixed(detected ? static_cast<double>(hits) / detected : 0.0)},
             {"chance_rate", fixed(detected ? weighted_chance / detected : 0.0)},
             {"true_boundary_chance", fixed(traces ? boundary_chance / traces : 0.0)}};
  }
  summary["change_points"] = cps;

  // Spectra of each app's first run.
  Json spectra = Json::object();
  for (auto c : config.conditions) {
    Json per_app = Json::object();
    for (const auto* r : runs_of(c)) {
      if (r->run_id != 0) continue;
      const auto s = fft_magnitude(r->measured, profile.sample_freq_hz());
      const auto peaks = detect_peaks(s, 5.0);
      per_app["app" + std::to_string(r->app_id)] =
          Json{{"prominent_peaks", peaks.size()},
               {"top_peak_hz", peaks.empty() ? 0.0 : fixed(s.frequency_hz(peaks.front().bin))}};
      if (write) {
        std::string text = "frequency_hz,magnitude\n";
        char buf[64];
        for (Eigen::Index k = 0; k < s.magnitude.size(); ++k) {
          std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", s.frequency_hz(k), s.magnitude(k));
          text += buf;
        }
        write_text_file(out_dir / "spectra" / (std::string(to_string(c)) + "_app" + std::to_string(r->app_id) + ".csv"),
                        text);
      }
    }
    spectra[std::string(to_string(c))] = per_app;
  }
  summary["spectra"] = spectra;

  // Overheads relative to Baseline.
  if (std::count(config.conditions.begin(), config.conditions.end(), Condition::Baseline)) {
    result.overhead = overhead_report(result.runs);
    Json o = Json::object();
    std::string text = "condition,power_ratio,completion_ratio,slowdown,runs\n";
    for (const auto& e : result.overhead.entries) {
      o[std::string(to_string(e.condition))] = Json{{"power_ratio", fixed(e.power_ratio)},
                                                    {"completion_ratio", fixed(e.completion_ratio)},
                                                    {"slowdown", fixed(e.slowdown())},
                                                    {"runs", e.runs}};
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%d\n", std::string(to_string(e.condition)).c_str(),
                    e.power_ratio, e.completion_ratio, e.slowdown(), e.runs);
      text += buf;
    }
    summary["overhead"] = o;
    if (write) write_text_file(out_dir / "overhead.csv", text);
  } else {
    summary["overhead"] = Json{{"skipped", "no Baseline condition"}};
  }

  result.summary = summary;
  if (write) {
    write_json_file(out_dir / "summary.json", summary);
    write_json_file(out_dir / "averaging.json", averaging);
    write_json_file(out_dir / "changepoints.json", cps);
  }
  return result;
}

}  // namespace maya
