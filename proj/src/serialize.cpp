#include "maya/serialize.hpp"

#include <fstream>
#include <sstream>

namespace maya {
namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const Json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols) throw Error("invalid_json", "ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

Json vector_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error("invalid_json", std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

Json to_json(const MachineProfile& p) {
  return Json{{"name", p.name},
              {"tdp_w", p.tdp_w},
              {"dvfs_grid", p.dvfs_grid},
              {"idle_grid", p.idle_grid},
              {"balloon_grid", p.balloon_grid},
              {"sample_period_ms", p.sample_period_ms},
              {"noise_sigma_w", p.noise_sigma_w},
              {"resolution_w", p.resolution_w},
              {"seed", p.seed},
              {"base_idle_w", p.base_idle_w},
              {"balloon_power_w", p.balloon_power_w},
              {"lowpass_alpha", p.lowpass_alpha}};
}

MachineProfile profile_from_json(const Json& j) {
  return guarded("profile", [&] {
    MachineProfile p = MachineProfile::sys1();
    p.name = j.value("name", p.name);
    p.tdp_w = j.at("tdp_w").get<double>();
    p.dvfs_grid = j.at("dvfs_grid").get<std::vector<double>>();
    p.idle_grid = j.at("idle_grid").get<std::vector<double>>();
    p.balloon_grid = j.at("balloon_grid").get<std::vector<double>>();
    p.sample_period_ms = j.at("sample_period_ms").get<double>();
    p.noise_sigma_w = j.at("noise_sigma_w").get<double>();
    p.resolution_w = j.at("resolution_w").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.base_idle_w = j.value("base_idle_w", p.base_idle_w);
    p.balloon_power_w = j.value("balloon_power_w", p.balloon_power_w);
    p.lowpass_alpha = j.value("lowpass_alpha", p.lowpass_alpha);
    p.validate();
    return p;
  });
}

Json to_json(const WorkloadSpec& w) {
  Json phases = Json::array();
  for (const auto& p : w.phases) {
    Json ph{{"mean_demand_w", p.mean_demand_w}, {"demand_sigma_w", p.demand_sigma_w}};
    ph["loop_period"] = p.loop_period ? Json(*p.loop_period) : Json(nullptr);
    ph["loop_amp_w"] = p.loop_amp_w;
    ph["duration"] = p.duration;
    ph["frame_jitter_w"] = p.frame_jitter_w;
    phases.push_back(std::move(ph));
  }
  return Json{{"app_id", w.app_id},
              {"name", w.name},
              {"kind", w.kind == WorkloadKind::App ? "app" : "video"},
              {"max_demand_w", w.max_demand_w},
              {"content_seed", w.content_seed},
              {"phases", std::move(phases)}};
}

WorkloadSpec workload_from_json(const Json& j) {
  return guarded("workload", [&] {
    WorkloadSpec w;
    w.app_id = j.at("app_id").get<int>();
    w.name = j.value("name", std::string("app") + std::to_string(w.app_id));
    const std::string kind = j.value("kind", std::string("app"));
    if (kind != "app" && kind != "video") throw Error("invalid_workload", "kind must be app or video");
    w.kind = kind == "app" ? WorkloadKind::App : WorkloadKind::Video;
    w.max_demand_w = j.value("max_demand_w", 95.0);
    w.content_seed = j.value("content_seed", std::uint64_t{0});
    for (const auto& ph : j.at("phases")) {
      PhaseSpec p;
      p.mean_demand_w = ph.at("mean_demand_w").get<double>();
      p.demand_sigma_w = ph.value("demand_sigma_w", 0.0);
      if (ph.contains("loop_period") && !ph.at("loop_period").is_null()) p.loop_period = ph.at("loop_period").get<int>();
      p.loop_amp_w = ph.value("loop_amp_w", 0.0);
      p.duration = ph.at("duration").get<int>();
      p.frame_jitter_w = ph.value("frame_jitter_w", 0.0);
      w.phases.push_back(p);
    }
    w.validate();
    return w;
  });
}

Json to_json(const std::vector<WorkloadSpec>& ws) {
  Json arr = Json::array();
  for (const auto& w : ws) arr.push_back(to_json(w));
  return arr;
}

std::vector<WorkloadSpec> workloads_from_json(const Json& j) {
  std::vector<WorkloadSpec> out;
  for (const auto& w : j) out.push_back(workload_from_json(w));
  return out;
}

Json to_json(const ArxModelD& m) {
  return Json{{"m", m.m()},
              {"n", m.n()},
              {"a", vector_json(m.a)},
              {"b", matrix_json(m.b.transpose())},
              {"bias", m.bias},
              {"residual_rms", m.residual_rms}};
}

ArxModelD arx_from_json(const Json& j) {
  return guarded("ARX model", [&] {
    ArxModelD m;
    m.a = vector_from(j.at("a"));
    const Eigen::MatrixXd bt = matrix_from(j.at("b"));
    if (bt.cols() != 3) throw Error("invalid_json", "ARX b rows must be 3-vectors");
    m.b = bt.transpose();
    m.bias = j.value("bias", 0.0);
    m.residual_rms = j.value("residual_rms", 0.0);
    return m;
  });
}

Json to_json(const ControllerMatricesD& c) {
  return Json{{"state_dim", c.state_dim()},
              {"A", matrix_json(c.A)},
              {"B", matrix_json(c.B)},
              {"C", matrix_json(c.C)},
              {"D", matrix_json(c.D)},
              {"operating_point", vector_json(c.operating_point)},
              {"command_min", vector_json(c.command_min)},
              {"command_max", vector_json(c.command_max)},
              {"integrator_index", c.integrator_index},
              {"command_register", c.command_register}};
}

ControllerMatricesD controller_from_json(const Json& j) {
  return guarded("controller", [&] {
    ControllerMatricesD c;
    c.A = matrix_from(j.at("A"));
    c.B = matrix_from(j.at("B"));
    c.C = matrix_from(j.at("C"));
    c.D = matrix_from(j.at("D"));
    c.operating_point = vector_from(j.at("operating_point"));
    c.command_min = vector_from(j.at("command_min"));
    c.command_max = vector_from(j.at("command_max"));
    c.integrator_index = j.at("integrator_index").get<Eigen::Index>();
    c.command_register = j.at("command_register").get<Eigen::Index>();
    c.validate();
    return c;
  });
}

Json to_json(const MaskRanges& r) {
  return Json{{"level", {r.level_lo, r.level_hi}},   {"offset", {r.offset_lo, r.offset_hi}},
              {"mu", {r.mu_lo, r.mu_hi}},            {"amp", {r.amp_lo, r.amp_hi}},
              {"sigma", {r.sigma_lo, r.sigma_hi}},   {"freq", {r.freq_lo, r.freq_hi}},
              {"constant_level", r.constant_level}, {"combined_share", r.combined_share},
              {"hold", {r.hold_min, r.hold_max}}};
}

MaskRanges mask_ranges_from_json(const Json& j) {
  return guarded("mask ranges", [&] {
    MaskRanges r;
    auto pair = [&](const char* key, double& lo, double& hi) {
      if (j.contains(key)) {
        lo = j.at(key).at(0).get<double>();
        hi = j.at(key).at(1).get<double>();
      }
    };
    pair("level", r.level_lo, r.level_hi);
    pair("offset", r.offset_lo, r.offset_hi);
    pair("mu", r.mu_lo, r.mu_hi);
    pair("amp", r.amp_lo, r.amp_hi);
    pair("sigma", r.sigma_lo, r.sigma_hi);
    pair("freq", r.freq_lo, r.freq_hi);
    r.constant_level = j.value("constant_level", r.constant_level);
    r.combined_share = j.value("combined_share", r.combined_share);
    if (j.contains("hold")) {
      r.hold_min = j.at("hold").at(0).get<int>();
      r.hold_max = j.at("hold").at(1).get<int>();
    }
    r.validate();
    return r;
  });
}

Json to_json(const MlpD& net) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    layers.push_back(Json{{"weights", matrix_json(net.weights[l])}, {"bias", vector_json(net.biases[l])}});
  return Json{{"sizes", net.sizes()}, {"layers", std::move(layers)}};
}

MlpD mlp_from_json(const Json& j) {
  return guarded("network", [&] {
    MlpD net(j.at("sizes").get<std::vector<int>>(), 0);
    const auto& layers = j.at("layers");
    if (layers.size() != net.weights.size()) throw Error("invalid_json", "layer count mismatch");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      Eigen::MatrixXd w = matrix_from(layers[l].at("weights"));
      Eigen::VectorXd b = vector_from(layers[l].at("bias"));
      if (w.rows() != net.weights[l].rows() || w.cols() != net.weights[l].cols() || b.size() != net.biases[l].size())
        throw Error("invalid_json", "layer shape mismatch");
      net.weights[l] = std::move(w);
      net.biases[l] = std::move(b);
    }
    return net;
  });
}

Json to_json(const IdDatasetD& d) {
  return Json{{"workload", d.workload}, {"inputs", matrix_json(d.inputs.transpose())}, {"outputs", vector_json(d.outputs)}};
}

IdDatasetD dataset_from_json(const Json& j) {
  return guarded("dataset", [&] {
    IdDatasetD d;
    d.workload = j.value("workload", std::string());
    d.inputs = matrix_from(j.at("inputs")).transpose();
    d.outputs = vector_from(j.at("outputs"));
    if (d.inputs.cols() != d.outputs.size()) throw Error("length_mismatch", "dataset inputs and outputs differ");
    return d;
  });
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error("invalid_json", path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << text;
  if (!out) throw Error("io_error", "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MachineProfile load_profile(const std::string& path_or_name) {
  if (path_or_name == "sys1") return MachineProfile::sys1();
  if (path_or_name == "sys2") return MachineProfile::sys2();
  return profile_from_json(read_json_file(path_or_name));
}

}  // namespace maya
