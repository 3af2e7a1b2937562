#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace cgem {

// Batch of environment states at a common horizon, with optional per-state
// log-density under the model fitted when the set was produced.
struct StateSet {
  Eigen::MatrixXd states;  // N x d, one row per state
  std::vector<double> log_densities;  // empty or size N
  std::vector<double> weights;        // empty or size N
  int horizon = 0;

  std::string env_id;
  std::string method;
  uint64_t seed = 0;
  uint64_t env_steps = 0;
  nlohmann::json config = nlohmann::json::object();

  Eigen::Index size() const { return states.rows(); }
  Eigen::Index dim() const { return states.cols(); }

  std::vector<double> row(Eigen::Index i) const;
  void validate() const;

  // JSONL: one header record, then one record per state.
  void save_jsonl(const std::string& path) const;
  static StateSet load_jsonl(const std::string& path);
};

}  // namespace cgem
