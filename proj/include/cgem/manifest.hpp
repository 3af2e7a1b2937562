#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cgem {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// One manifest per CLI run: command, resolved config, seed, timings, step
// counts, and a digest of every emitted file.
struct ExperimentManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  uint64_t seed = 0;
  std::string version;
  double wall_clock_sec = 0.0;
  uint64_t env_steps = 0;

  struct Output {
    std::string path;
    std::string sha256;
    uint64_t bytes = 0;
  };
  std::vector<Output> outputs;

  void add_output(const std::string& path);
  nlohmann::json to_json() const;
  void save(const std::string& path) const;
};

}  // namespace cgem
