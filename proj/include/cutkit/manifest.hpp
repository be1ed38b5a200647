#pragma once

#include "cutkit/common.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace cutkit::cli {

// Reproducibility record written next to every pipeline output. Re-running
// the recorded command with the same inputs and seed reproduces the outputs
// bit-identically; only the timestamp differs.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;
  std::string tool_version = kVersion;
  std::string timestamp;

  static RunManifest make(const std::vector<std::string>& argv, const nlohmann::json& config,
                          std::uint64_t seed, const std::vector<std::string>& input_files);
  nlohmann::json to_json() const;
  // For a file output, pass "<file>.manifest.json"; for a directory output,
  // "<dir>/manifest.json".
  void write(const std::string& path) const;
};

}  // namespace cutkit::cli
