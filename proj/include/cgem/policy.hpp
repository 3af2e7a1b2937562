#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cgem/env.hpp"

namespace cgem {

// Goal-conditioned controller: observation plus flattened goal pose in,
// action out.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual Action act(const State& state, const std::vector<double>& goal_vec) const = 0;
};

// Two-hidden-layer tanh network; the goal vector is appended to the
// observation and the output is squashed into the action box.
class MlpPolicy final : public Controller {
 public:
  MlpPolicy() = default;
  MlpPolicy(std::string env_id, int obs_dim, int goal_dim, std::vector<double> act_lo,
            std::vector<double> act_hi, std::vector<int> hidden = {64, 64});

  Action act(const State& state, const std::vector<double>& goal_vec) const override;

  Eigen::Index parameter_count() const;
  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& p);

  // Small random hidden weights, zero output layer: the initial policy holds
  // still.
  void init_weights(std::mt19937_64& rng, double scale = 0.5);

  const std::string& env_id() const { return env_id_; }
  int obs_dim() const { return obs_dim_; }
  int goal_dim() const { return goal_dim_; }
  int act_dim() const { return static_cast<int>(act_lo_.size()); }
  const std::vector<int>& hidden() const { return hidden_; }

  nlohmann::json to_json() const;
  static MlpPolicy from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static MlpPolicy load(const std::string& path);

 private:
  std::string env_id_;
  int obs_dim_ = 0;
  int goal_dim_ = 0;
  std::vector<double> act_lo_, act_hi_;
  std::vector<int> hidden_{64, 64};
  std::vector<int> layer_sizes_;  // [in, h..., out]
  Eigen::VectorXd params_;

  void rebuild_layout();
};

// Proportional controller for the maze: move straight at the goal, clipped to
// the action box. Exact in free space; used as the curriculum oracle.
class MazeOracleController final : public Controller {
 public:
  Action act(const State& state, const std::vector<double>& goal_vec) const override;
};

}  // namespace cgem
