#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "maya/controller.hpp"
#include "maya/mask.hpp"
#include "maya/mlp.hpp"
#include "maya/plant.hpp"
#include "maya/sysid.hpp"
#include "maya/workloads.hpp"

namespace maya {

using Json = nlohmann::ordered_json;

Json to_json(const MachineProfile& p);
MachineProfile profile_from_json(const Json& j);

Json to_json(const WorkloadSpec& w);
WorkloadSpec workload_from_json(const Json& j);
Json to_json(const std::vector<WorkloadSpec>& ws);
std::vector<WorkloadSpec> workloads_from_json(const Json& j);

Json to_json(const ArxModelD& m);
ArxModelD arx_from_json(const Json& j);

Json to_json(const ControllerMatricesD& c);
ControllerMatricesD controller_from_json(const Json& j);

Json to_json(const MaskRanges& r);
MaskRanges mask_ranges_from_json(const Json& j);

Json to_json(const MlpD& net);
MlpD mlp_from_json(const Json& j);

Json to_json(const IdDatasetD& d);
IdDatasetD dataset_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Profile from a JSON file, or a built-in name ("sys1", "sys2").
MachineProfile load_profile(const std::string& path_or_name);

}  // namespace maya
