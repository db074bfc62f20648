#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "maya/attack.hpp"
#include "maya/harness.hpp"
#include "maya/serialize.hpp"

using namespace maya;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string profile = "sys1";
  std::uint64_t seed = 1;
  std::string out = "maya_out";
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// Every trace file under `path` (or `path` itself), in sorted order.
std::vector<PowerTrace> load_traces(const std::string& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  } else {
    files.emplace_back(path);
  }
  std::sort(files.begin(), files.end());
  std::vector<PowerTrace> out;
  for (const auto& f : files) {
    const std::string text = read_text_file(f);
    if (text.rfind("# maya-trace v1;", 0) != 0) continue;
    out.push_back(parse_trace(text));
  }
  if (out.empty()) throw Error("no_traces", "no trace files found at " + path);
  return out;
}

std::string csv_matrix(const Eigen::MatrixXd& m) {
  std::string text;
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, j ? ",%.6f" : "%.6f", m(i, j));
      text += buf;
    }
    text += "\n";
  }
  return text;
}

ControllerMatricesD controller_or_design(const std::string& path, const MachineProfile& profile, std::uint64_t seed) {
  if (!path.empty()) return controller_from_json(read_json_file(path));
  return design_loop(profile, seed).controller;
}

struct AttackData {
  std::vector<SampleVector> samples;
  std::vector<int> app_of_label;
};

AttackData attack_data(const std::vector<PowerTrace>& traces, int segment, double tdp,
                       std::vector<int> app_of_label = {}) {
  if (app_of_label.empty()) {
    std::set<int> apps;
    for (const auto& t : traces)
      if (!t.records.empty()) apps.insert(t.records.front().app_id);
    app_of_label.assign(apps.begin(), apps.end());
  }
  AttackData d{{}, app_of_label};
  for (const auto& t : traces) {
    if (t.records.empty()) continue;
    const auto it = std::find(app_of_label.begin(), app_of_label.end(), t.records.front().app_id);
    if (it == app_of_label.end()) throw Error("unknown_app", "trace app is not a class of this model");
    const auto s = preprocess(t.measured(), static_cast<int>(it - app_of_label.begin()), segment, 0.0, tdp);
    d.samples.insert(d.samples.end(), s.begin(), s.end());
  }
  if (d.samples.empty()) throw Error("empty_dataset", "traces are shorter than one segment");
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-shaping simulator and side-channel experiment harness"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--profile", g.profile, "profile JSON file or built-in name (sys1, sys2)");
  app.add_option("--seed", g.seed, "base seed");
  app.add_option("--out", g.out, "output directory");

  std::function<void()> action;

  // identify
  auto* identify = app.add_subcommand("identify", "excite the plant, fit an ARX model and save it");
  int id_length = 4000;
  int id_m = 4, id_n = 4;
  bool save_data = false;
  identify->add_option("--length", id_length, "samples per excitation dataset");
  identify->add_option("--m", id_m, "output order");
  identify->add_option("--n", id_n, "input order");
  identify->add_flag("--save-data", save_data, "also write the excitation datasets");
  identify->callback([&] {
    action = [&] {
      const auto profile = load_profile(g.profile);
      const auto r = identify_plant(profile, g.seed, id_length, id_m, id_n);
      write_json_file(fs::path(g.out) / "model.json", to_json(r.model));
      if (save_data)
        for (const auto& d : r.datasets) write_json_file(fs::path(g.out) / ("id_" + d.workload + ".json"), to_json(d));
      std::printf("holdout_fit=%.6f spectral_radius=%.6f residual_rms=%.6f\n", r.holdout_fit,
                  spectral_radius<double>(r.model.a), r.model.residual_rms);
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "synthesize the tracking controller from a saved model");
  std::string model_path;
  double deviation_bound = 0.1, perturbation = 0.4;
  std::vector<double> weights{1.0, 1.0, 1.0};
  synth->add_option("--model", model_path, "ARX model JSON")->required();
  synth->add_option("--deviation-bound", deviation_bound, "allowed output deviation, fraction of output scale");
  synth->add_option("--weights", weights, "input weights: dvfs idle balloon")->expected(3);
  synth->add_option("--perturbation", perturbation, "gain guardband to validate");
  synth->callback([&] {
    action = [&] {
      const auto profile = load_profile(g.profile);
      const auto model = arx_from_json(read_json_file(model_path));
      const auto c = synthesize<double>(model, Eigen::Vector3d(weights[0], weights[1], weights[2]), deviation_bound,
                                        SynthesisOptions::for_profile(profile));
      write_json_file(fs::path(g.out) / "controller.json", to_json(c));
      const auto rob = robustness_check(c, model, perturbation);
      std::printf("spectral_radius=%.6f guardband=%.2f all_stable=%s max_deviation=%.6f\n",
                  closed_loop_spectral_radius(c, model), perturbation, rob.all_stable ? "true" : "false",
                  rob.max_deviation);
    };
  });

  // run
  auto* run = app.add_subcommand("run", "simulate one trace");
  int run_app = 0, run_length = 2000, run_id = 0;
  std::string condition_name = "MayaGaussianSinusoid", controller_path, workloads_path, trace_path;
  run->add_option("--app", run_app, "workload app_id");
  run->add_option("--workloads", workloads_path, "workload suite JSON (default: built-in suite)");
  run->add_option("--condition", condition_name, "Baseline, NoisyBaseline, MayaConstant, ...");
  run->add_option("--controller", controller_path, "controller JSON (default: identify and synthesize now)");
  run->add_option("--length", run_length, "samples");
  run->add_option("--run-id", run_id, "run index logged in the trace");
  run->add_option("--trace", trace_path, "trace file (default: <out>/trace.csv)");
  run->callback([&] {
    action = [&] {
      const auto profile = load_profile(g.profile);
      const auto suite = workloads_path.empty() ? builtin_suite(profile) : workloads_from_json(read_json_file(workloads_path));
      const auto w = std::find_if(suite.begin(), suite.end(), [&](const auto& s) { return s.app_id == run_app; });
      if (w == suite.end()) throw Error("unknown_app", "no workload with app_id " + std::to_string(run_app));
      const Condition c = parse_condition(condition_name);
      std::optional<ControllerMatricesD> ctrl;
      std::optional<MaskProgram> mask;
      if (is_maya(c)) {
        ctrl = controller_or_design(controller_path, profile, g.seed);
        mask = make_mask(c, profile, g.seed);
      }
      const auto tr = run_once(*w, c, profile, ctrl ? &*ctrl : nullptr, mask, g.seed, run_length, run_id);
      const fs::path path = trace_path.empty() ? fs::path(g.out) / "trace.csv" : fs::path(trace_path);
      write_text_file(path, format_trace(tr));
      const auto y = tr.measured();
      double mean = 0.0;
      for (double v : y) mean += v;
      std::printf("trace=%s samples=%zu mean_power_w=%.4f\n", path.string().c_str(), y.size(), mean / double(y.size()));
    };
  });

  // campaign
  auto* campaign = app.add_subcommand("campaign", "run the full experiment and write every artifact");
  std::string config_path, conditions_list, apps_list;
  int runs = -1, length = -1, threads = -1;
  bool write_traces = false;
  campaign->add_option("--config", config_path, "campaign config JSON");
  campaign->add_option("--runs", runs, "runs per app and condition");
  campaign->add_option("--length", length, "samples per trace");
  campaign->add_option("--conditions", conditions_list, "comma-separated condition names");
  campaign->add_option("--apps", apps_list, "comma-separated app ids");
  campaign->add_option("--threads", threads, "worker threads (0 = all cores)");
  campaign->add_flag("--write-traces", write_traces, "write every trace file");
  campaign->callback([&] {
    action = [&] {
      CampaignConfig cfg = config_path.empty() ? CampaignConfig{} : campaign_from_json(read_json_file(config_path));
      if (config_path.empty() || app.get_option("--profile")->count()) cfg.profile = load_profile(g.profile);
      if (config_path.empty() || app.get_option("--seed")->count()) cfg.seed = g.seed;
      if (runs >= 0) cfg.runs_per_app = runs;
      if (length >= 0) cfg.trace_length = length;
      if (threads >= 0) cfg.threads = threads;
      if (write_traces) cfg.write_traces = true;
      if (!conditions_list.empty()) {
        cfg.conditions.clear();
        for (const auto& n : split_list(conditions_list)) cfg.conditions.push_back(parse_condition(n));
      }
      if (!apps_list.empty()) {
        cfg.apps.clear();
        for (const auto& n : split_list(apps_list)) cfg.apps.push_back(std::stoi(n));
      }
      cfg.output_dir = g.out;
      const auto r = run_campaign(cfg);
      for (const auto& a : r.attacks)
        std::printf("%s adaptive_accuracy=%.4f transfer_accuracy=%.4f\n", std::string(to_string(a.condition)).c_str(),
                    a.test_accuracy, a.transfer_accuracy);
      std::printf("failed_runs=%d summary=%s\n", r.failed_runs, (fs::path(g.out) / "summary.json").string().c_str());
    };
  });

  // attack
  auto* attack = app.add_subcommand("attack", "train or evaluate the trace classifier");
  attack->require_subcommand(1);
  std::string traces_path, net_path;
  int segment = 500, epochs = 40, batch = 32;
  double learn_rate = 0.05, momentum = 0.0;
  std::vector<int> hidden{64, 32};
  auto* train_cmd = attack->add_subcommand("train", "train on a directory of traces, labels = app ids");
  train_cmd->add_option("--traces", traces_path, "trace file or directory")->required();
  train_cmd->add_option("--segment", segment, "samples per classifier input");
  train_cmd->add_option("--epochs", epochs, "training epochs");
  train_cmd->add_option("--learn-rate", learn_rate, "SGD step size");
  train_cmd->add_option("--batch", batch, "mini-batch size");
  train_cmd->add_option("--momentum", momentum, "SGD momentum");
  train_cmd->add_option("--hidden", hidden, "hidden layer widths")->expected(2);
  train_cmd->callback([&] {
    action = [&] {
      const auto profile = load_profile(g.profile);
      const auto d = attack_data(load_traces(traces_path), segment, profile.tdp_w);
      TrainOptions opt;
      opt.epochs = epochs;
      opt.learn_rate = learn_rate;
      opt.batch_size = batch;
      opt.momentum = momentum;
      opt.seed = g.seed;
      const int classes = static_cast<int>(d.app_of_label.size());
      const auto r = train(MlpD({static_cast<int>(d.samples.front().features.size()), hidden[0], hidden[1], classes},
                                derive_seed(g.seed, 0x6e6574)),
                           d.samples, opt);
      Json j{{"segment_length", segment}, {"quant_min", 0.0}, {"quant_max", profile.tdp_w},
             {"app_of_label", d.app_of_label}, {"best_epoch", r.best_epoch}, {"network", to_json(r.model)}};
      write_json_file(fs::path(g.out) / "attack_model.json", j);
      std::printf("samples=%zu classes=%d train=%.4f validation=%.4f test=%.4f chance=%.4f\n", d.samples.size(), classes,
                  r.train_accuracy, r.validation_accuracy, r.test_accuracy, 1.0 / classes);
    };
  });
  auto* evaluate = attack->add_subcommand("evaluate", "score a trained model on traces and write its confusion matrix");
  evaluate->add_option("--model", net_path, "attack model JSON from 'attack train'")->required();
  evaluate->add_option("--traces", traces_path, "trace file or directory")->required();
  evaluate->callback([&] {
    action = [&] {
      const Json j = read_json_file(net_path);
      const auto net = mlp_from_json(j.at("network"));
      const auto d = attack_data(load_traces(traces_path), j.at("segment_length").get<int>(),
                                 j.at("quant_max").get<double>(), j.at("app_of_label").get<std::vector<int>>());
      const auto m = confusion(net, d.samples, net.classes());
      write_text_file(fs::path(g.out) / "confusion.csv", csv_matrix(m));
      std::printf("samples=%zu accuracy=%.4f chance=%.4f\n", d.samples.size(), accuracy(net, d.samples),
                  1.0 / net.classes());
    };
  });

  // analyze
  auto* analyze = app.add_subcommand("analyze", "spectra, change points and averaging studies");
  analyze->require_subcommand(1);
  double prominence = 5.0;
  std::optional<double> penalty;
  int min_segment = 5, min_runs = 30;
  auto* fft = analyze->add_subcommand("fft", "magnitude spectrum and prominent peaks of one trace");
  fft->add_option("--trace", traces_path, "trace file")->required();
  fft->add_option("--prominence", prominence, "peak threshold as a multiple of the median bin");
  fft->callback([&] {
    action = [&] {
      const auto tr = load_traces(traces_path).front();
      const auto s = fft_magnitude(tr.measured(), 1000.0 / tr.header.period_ms);
      std::string text = "frequency_hz,magnitude\n";
      char buf[64];
      for (Eigen::Index k = 0; k < s.magnitude.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", s.frequency_hz(k), s.magnitude(k));
        text += buf;
      }
      write_text_file(fs::path(g.out) / "spectrum.csv", text);
      const auto peaks = detect_peaks(s, prominence);
      std::printf("bins=%lld peaks=%zu\n", static_cast<long long>(s.magnitude.size()), peaks.size());
      for (std::size_t i = 0; i < std::min<std::size_t>(peaks.size(), 10); ++i)
        std::printf("peak frequency_hz=%.6f magnitude=%.4f\n", s.frequency_hz(peaks[i].bin), peaks[i].magnitude);
    };
  });
  auto* cps = analyze->add_subcommand("changepoints", "segment one trace");
  cps->add_option("--trace", traces_path, "trace file")->required();
  cps->add_option("--penalty", penalty, "split penalty (default 3 ln n)");
  cps->add_option("--min-segment", min_segment, "shortest segment");
  cps->callback([&] {
    action = [&] {
      const auto y = load_traces(traces_path).front().measured();
      const auto r = change_points(y, penalty.value_or(default_penalty(static_cast<Eigen::Index>(y.size()))), min_segment);
      std::string text = "start,end,mean,variance\n";
      char buf[96];
      Eigen::Index start = 0;
      for (std::size_t i = 0; i < r.segment_mean.size(); ++i) {
        const Eigen::Index end = i < r.boundaries.size() ? r.boundaries[i] : static_cast<Eigen::Index>(y.size());
        std::snprintf(buf, sizeof buf, "%lld,%lld,%.6f,%.6f\n", static_cast<long long>(start),
                      static_cast<long long>(end), r.segment_mean[i], r.segment_variance[i]);
        text += buf;
        start = end;
      }
      write_text_file(fs::path(g.out) / "changepoints.csv", text);
      std::printf("boundaries=%zu", r.boundaries.size());
      for (auto b : r.boundaries) std::printf(" %lld", static_cast<long long>(b));
      std::printf("\n");
    };
  });
  auto* average = analyze->add_subcommand("average", "per-app averaged traces and box statistics");
  average->add_option("--traces", traces_path, "trace directory")->required();
  average->add_option("--condition", condition_name, "condition to select");
  average->add_option("--min-runs", min_runs, "minimum runs per app");
  average->callback([&] {
    action = [&] {
      const Condition c = parse_condition(condition_name);
      std::map<int, std::vector<std::vector<double>>> by_app;
      for (const auto& t : load_traces(traces_path))
        if (!t.records.empty() && t.records.front().condition == c) by_app[t.records.front().app_id].push_back(t.measured());
      const auto s = averaging_study(by_app, std::string(to_string(c)), min_runs);
      std::string text = "app_id,median,q25,q75,whisker_lo,whisker_hi,outliers\n";
      char buf[160];
      for (const auto& a : s.per_app) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%zu\n", a.app_id, a.median, a.q25, a.q75,
                      a.whisker_lo, a.whisker_hi, a.outliers.size());
        text += buf;
      }
      write_text_file(fs::path(g.out) / "averaging.csv", text);
      std::printf("runs=%d pooled_iqr=%.6f max_median_gap=%.6f gap_over_iqr=%.6f\n", s.runs, s.pooled_iqr,
                  s.max_median_gap, s.max_median_gap / s.pooled_iqr);
    };
  });

  // report
  auto* report = app.add_subcommand("report", "overhead and confusion tables");
  report->require_subcommand(1);
  std::string campaign_dir;
  auto* overheads = report->add_subcommand("overheads", "power and completion ratios against Baseline");
  overheads->add_option("--traces", traces_path, "trace directory containing Baseline traces")->required();
  overheads->add_option("--workloads", workloads_path, "workload suite JSON (default: built-in suite)");
  overheads->callback([&] {
    action = [&] {
      const auto profile = load_profile(g.profile);
      const auto suite = workloads_path.empty() ? builtin_suite(profile) : workloads_from_json(read_json_file(workloads_path));
      const auto r = overhead_report(load_traces(traces_path), suite, profile);
      std::printf("condition,power_ratio,completion_ratio,slowdown,runs\n");
      for (const auto& e : r.entries)
        std::printf("%s,%.6f,%.6f,%.6f,%d\n", std::string(to_string(e.condition)).c_str(), e.power_ratio,
                    e.completion_ratio, e.slowdown(), e.runs);
    };
  });
  auto* conf = report->add_subcommand("confusion", "print the confusion matrices of a campaign");
  conf->add_option("--campaign", campaign_dir, "campaign output directory")->required();
  conf->callback([&] {
    action = [&] {
      const fs::path dir = fs::path(campaign_dir) / "confusion";
      if (!fs::is_directory(dir)) throw Error("missing_artifact", "no confusion directory in " + campaign_dir);
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) std::printf("# %s\n%s", f.stem().string().c_str(), read_text_file(f).c_str());
    };
  });

  try {
    app.parse(argc, argv);
    if (action) action();
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error: code=usage message=\"%s\"\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: code=%s message=\"%s\"\n", e.code().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: code=internal message=\"%s\"\n", e.what());
    return 1;
  }
  return 0;
}
