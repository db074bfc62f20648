#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maya/mask.hpp"
#include "maya/plant.hpp"

namespace maya {

enum class Condition {
  Baseline,
  NoisyBaseline,
  MayaConstant,
  MayaUniform,
  MayaGaussian,
  MayaSinusoid,
  MayaGaussianSinusoid,
};

std::string_view to_string(Condition c);
Condition parse_condition(std::string_view name);
const std::vector<Condition>& all_conditions();
bool is_maya(Condition c);
MaskFamily mask_family_for(Condition c);

struct TraceRecord {
  std::int64_t t = 0;
  std::optional<double> target_w;
  double measured_w = 0.0;
  ActuatorSetting setting;
  int app_id = 0;
  int run_id = 0;
  Condition condition = Condition::Baseline;
};

struct TraceHeader {
  std::string profile_hash;
  std::uint64_t seed = 0;
  int period_ms = 20;
};

struct PowerTrace {
  TraceHeader header;
  std::vector<TraceRecord> records;

  std::vector<double> measured() const;
  std::vector<double> targets() const;  // Maya traces only
  std::size_t size() const { return records.size(); }
};

void write_trace(std::ostream& out, const PowerTrace& trace);
std::string format_trace(const PowerTrace& trace);
PowerTrace read_trace(std::istream& in);
PowerTrace parse_trace(const std::string& text);

// Invariants: t = 0, 1, ...; power within [0, tdp]; settings on grid; targets present iff Maya.
void check_trace(const PowerTrace& trace, const MachineProfile& profile);

}  // namespace maya
