#include "maya/trace.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace maya {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Baseline: return "Baseline";
    case Condition::NoisyBaseline: return "NoisyBaseline";
    case Condition::MayaConstant: return "MayaConstant";
    case Condition::MayaUniform: return "MayaUniform";
    case Condition::MayaGaussian: return "MayaGaussian";
    case Condition::MayaSinusoid: return "MayaSinusoid";
    case Condition::MayaGaussianSinusoid: return "MayaGaussianSinusoid";
  }
  return "?";
}

const std::vector<Condition>& all_conditions() {
  static const std::vector<Condition> all{Condition::Baseline,     Condition::NoisyBaseline,
                                          Condition::MayaConstant, Condition::MayaUniform,
                                          Condition::MayaGaussian, Condition::MayaSinusoid,
                                          Condition::MayaGaussianSinusoid};
  return all;
}

Condition parse_condition(std::string_view name) {
  for (auto c : all_conditions())
    if (name == to_string(c)) return c;
  throw Error("unknown_condition", "unknown condition '" + std::string(name) + "'");
}

bool is_maya(Condition c) { return c != Condition::Baseline && c != Condition::NoisyBaseline; }

MaskFamily mask_family_for(Condition c) {
  switch (c) {
    case Condition::MayaConstant: return MaskFamily::Constant;
    case Condition::MayaUniform: return MaskFamily::UniformRandom;
    case Condition::MayaGaussian: return MaskFamily::Gaussian;
    case Condition::MayaSinusoid: return MaskFamily::Sinusoid;
    case Condition::MayaGaussianSinusoid: return MaskFamily::GaussianSinusoid;
    default: throw Error("no_mask", std::string(to_string(c)) + " has no mask");
  }
}

std::vector<double> PowerTrace::measured() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.measured_w);
  return out;
}

std::vector<double> PowerTrace::targets() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records)
    if (r.target_w) out.push_back(*r.target_w);
  return out;
}

void write_trace(std::ostream& out, const PowerTrace& trace) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "# maya-trace v1; profile=%s; seed=%" PRIu64 "; period_ms=%d\n",
                trace.header.profile_hash.c_str(), trace.header.seed, trace.header.period_ms);
  out << buf;
  for (const auto& r : trace.records) {
    char target[32] = "";
    if (r.target_w) std::snprintf(target, sizeof target, "%.4f", *r.target_w);
    std::snprintf(buf, sizeof buf, "%" PRId64 ",%s,%.4f,%.4f,%.4f,%.4f,%d,%d,", r.t, target, r.measured_w,
                  r.setting.dvfs_ghz, r.setting.idle_pct, r.setting.balloon_pct, r.app_id, r.run_id);
    out << buf << to_string(r.condition) << '\n';
  }
}

std::string format_trace(const PowerTrace& trace) {
  std::ostringstream ss;
  write_trace(ss, trace);
  return ss.str();
}

namespace {

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  throw Error("invalid_trace", "line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad(line, "bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

PowerTrace read_trace(std::istream& in) {
  PowerTrace trace;
  std::string line;
  if (!std::getline(in, line)) bad(1, "missing header");
  char hash[128];
  unsigned long long seed = 0;
  int period = 0;
  if (std::sscanf(line.c_str(), "# maya-trace v1; profile=%127[^;]; seed=%llu; period_ms=%d", hash, &seed, &period) != 3)
    bad(1, "malformed header");
  trace.header = {hash, static_cast<std::uint64_t>(seed), period};
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
      f.push_back(rest.substr(0, pos));
    f.push_back(rest);
    if (f.size() != 9) bad(n, "expected 9 fields");
    TraceRecord r;
    r.t = parse_number<std::int64_t>(f[0], n);
    if (!f[1].empty()) r.target_w = parse_number<double>(f[1], n);
    r.measured_w = parse_number<double>(f[2], n);
    r.setting = {parse_number<double>(f[3], n), parse_number<double>(f[4], n), parse_number<double>(f[5], n)};
    r.app_id = parse_number<int>(f[6], n);
    r.run_id = parse_number<int>(f[7], n);
    r.condition = parse_condition(f[8]);
    trace.records.push_back(r);
  }
  return trace;
}

PowerTrace parse_trace(const std::string& text) {
  std::istringstream ss(text);
  return read_trace(ss);
}

void check_trace(const PowerTrace& trace, const MachineProfile& profile) {
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (r.t != static_cast<std::int64_t>(i)) throw Error("invalid_trace", "t must count up from 0");
    if (r.measured_w < 0 || r.measured_w > profile.tdp_w) throw Error("invalid_trace", "measured power outside [0, tdp]");
    if (!profile.on_grid(r.setting)) throw Error("invalid_trace", "setting off the actuator grids");
    if (r.target_w.has_value() != is_maya(r.condition))
      throw Error("invalid_trace", "target_w must be present exactly for Maya conditions");
  }
}

}  // namespace maya
