#include "sme/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "sme/errors.hpp"

namespace sme {

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot checksum missing file: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  j["command"] = m.command;
  j["parameters"] = m.parameters;
  j["inputs"] = m.inputs;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : m.outputs) {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(o)));
    outs.push_back({{"path", o}, {"fnv1a64", hex}});
  }
  j["outputs"] = outs;
  j["seed"] = m.seed;
  j["deterministic"] = m.deterministic;
  j["duration_seconds"] = m.deterministic ? 0.0 : m.duration_seconds;
  j["status"] = m.status;

  std::ofstream out(path);
  if (!out) throw validation_error("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace sme
