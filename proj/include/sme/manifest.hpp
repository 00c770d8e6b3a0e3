#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace sme {

// Reproducibility record written alongside every CLI output: the command,
// every resolved parameter, input/output paths with content checksums, and
// the seed. Wall-clock duration is zeroed in deterministic mode so reruns
// are byte-identical.
struct RunManifest {
  std::string command;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  double duration_seconds = 0.0;
  bool deterministic = false;
  std::string status = "ok";
};

// FNV-1a 64-bit over the file bytes.
std::uint64_t fnv1a64_file(const std::string& path);

void write_manifest(const RunManifest& m, const std::string& path);

}  // namespace sme
