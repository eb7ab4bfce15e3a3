#ifndef LIGHTTRACK_MANIFEST_HPP
#define LIGHTTRACK_MANIFEST_HPP

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lighttrack/errors.hpp"
#include "lighttrack/tracker.hpp"
#include "lighttrack/version.hpp"

namespace lighttrack {

inline constexpr int kManifestFormatVersion = 1;

// One manifest per CLI run: the resolved configuration (everything needed to
// reproduce the outputs bitwise via `rerun`), plus timing telemetry. Timings
// are informational and obviously not reproducible.
struct RunManifest {
  std::string command;
  std::string tool_version = kVersion;
  nlohmann::json config;  // resolved subcommand options
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  StageTimings timings;
  int frames = 0;                         // tracking runs only
  double fps_excluding_estimation = 0.0;  // frames / (total - estimation)
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  using nlohmann::json;
  json j;
  j["format_version"] = kManifestFormatVersion;
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  json t;
  t["total_s"] = m.timings.total_s;
  t["io_s"] = m.timings.io_s;
  t["estimation_s"] = m.timings.estimation_s;
  t["association_s"] = m.timings.association_s;
  t["matching_s"] = m.timings.matching_s;
  j["timings"] = t;
  if (m.frames > 0) {
    j["frames"] = m.frames;
    j["fps_excluding_estimation"] = m.fps_excluding_estimation;
  }
  return j;
}

inline RunManifest parse_manifest(const nlohmann::json& j) {
  if (!j.contains("format_version")) throw ParseError("manifest: missing format_version");
  if (j.at("format_version").get<int>() != kManifestFormatVersion) {
    throw SchemaVersionError("manifest: unsupported format_version");
  }
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config = j.at("config");
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    const auto& t = j.at("timings");
    m.timings.total_s = t.at("total_s").get<double>();
    m.timings.io_s = t.at("io_s").get<double>();
    m.timings.estimation_s = t.at("estimation_s").get<double>();
    m.timings.association_s = t.at("association_s").get<double>();
    m.timings.matching_s = t.at("matching_s").get<double>();
    m.frames = j.value("frames", 0);
    m.fps_excluding_estimation = j.value("fps_excluding_estimation", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

inline RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("manifest: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest " + path + ": " + e.what());
  }
  return parse_manifest(j);
}

inline void save_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ProviderError("manifest: cannot write " + path);
  out << manifest_to_json(m).dump(1) << "\n";
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_MANIFEST_HPP
