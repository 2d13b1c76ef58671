#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dialsel {

inline constexpr const char* kToolVersion = "0.1.0";

// Everything needed to re-run a command exactly: the command line, the fully
// resolved configuration, the seed, and content digests of every input.
// Written before any artifact so a crashed run still leaves its provenance.
struct RunManifest {
  std::string command;
  std::string config_json;  // resolved config as a JSON object string
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;
  std::string tool_version = kToolVersion;
};

// FNV-1a over the raw bytes, rendered as 16 hex digits.
std::string fnv1a64_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

std::string manifest_to_json(const RunManifest& m);
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace dialsel
