#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "phocal/anno_sim.hpp"
#include "phocal/metrics.hpp"
#include "phocal/registration.hpp"

namespace phocal::io {

using nlohmann::json;

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Provenance attached to every report.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> params;
    std::optional<std::uint64_t> seed;
    std::string version = kToolkitVersion;
    std::map<std::string, std::string> input_digests;  ///< path -> sha256
    std::string timestamp;                              ///< UTC, ISO 8601
};

/// The report-embedded form leaves out the timestamp so reruns stay
/// byte-identical; the full form goes to the sidecar file.
json to_json(const RunManifest& m, bool with_timestamp);
RunManifest manifest_from_json(const json& j);

json to_json(const Pose3d& p);
Pose3d pose_from_json(const json& j, const std::string& where);

/// Scene files carry units and convention keys and are checked like the
/// text formats.
json to_json(const SceneConfig& scene);
SceneConfig scene_from_json(const json& j);

json to_json(const NoiseSpec& spec);
NoiseSpec noise_from_json(const json& j);

json to_json(const SimReport& r);
SimReport sim_report_from_json(const json& j);

/// CSV with columns camera,object,frame,rmse_mm.
std::string sim_report_csv(const SimReport& r);

json to_json(const IcpParams& p);
/// Missing keys keep their defaults; unknown keys are rejected.
IcpParams icp_params_from_json(const json& j);

json to_json(const ApReport& r);

/// Parses JSON text; syntax and type errors become ParseError/ValidationError.
json parse_json(const std::string& text, const std::string& source);

/// Deterministic text form: two-space indent, trailing newline.
std::string dump(const json& j);

}  // namespace phocal::io
