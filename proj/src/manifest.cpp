#include "cutkit/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace cutkit::cli {

RunManifest RunManifest::make(const std::vector<std::string>& argv,
                              const nlohmann::json& config, std::uint64_t seed,
                              const std::vector<std::string>& input_files) {
  RunManifest m;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (i) m.command += " ";
    m.command += argv[i];
  }
  m.config_hash = hex64(fnv1a64(config.dump()));
  m.seed = seed;
  for (const auto& f : input_files) m.input_hashes[f] = hex64(hash_file(f));

  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  m.timestamp = buf;
  return m;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"config_hash", config_hash},
          {"seed", seed},
          {"input_hashes", input_hashes},
          {"tool_version", tool_version},
          {"timestamp", timestamp}};
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << to_json().dump(2) << "\n";
}

}  // namespace cutkit::cli
