#include "dialsel/manifest.hpp"

#include <fstream>
#include <sstream>

#include "dialsel/error.hpp"
#include "json.hpp"

namespace dialsel {

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(path + ": cannot open for digest");
  std::stringstream ss;
  ss << is.rdbuf();
  return fnv1a64_hex(ss.str());
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = nlohmann::json::parse(m.config_json.empty() ? "{}" : m.config_json);
  j["seed"] = m.seed;
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [path, digest] : m.inputs) inputs[path] = digest;
  j["inputs"] = inputs;
  j["outputs"] = m.outputs;
  j["tool_version"] = m.tool_version;
  return j.dump(2);
}

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream os(path);
  if (!os) throw Error(path + ": cannot open for writing");
  os << manifest_to_json(m) << '\n';
  if (!os) throw Error(path + ": write failed");
}

}  // namespace dialsel
