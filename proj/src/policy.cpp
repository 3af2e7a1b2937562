#include "cgem/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cgem/rng.hpp"

namespace cgem {

using nlohmann::json;

MlpPolicy::MlpPolicy(std::string env_id, int obs_dim, int goal_dim,
                     std::vector<double> act_lo, std::vector<double> act_hi,
                     std::vector<int> hidden)
    : env_id_(std::move(env_id)),
      obs_dim_(obs_dim),
      goal_dim_(goal_dim),
      act_lo_(std::move(act_lo)),
      act_hi_(std::move(act_hi)),
      hidden_(std::move(hidden)) {
  rebuild_layout();
  params_ = Eigen::VectorXd::Zero(parameter_count());
}

void MlpPolicy::rebuild_layout() {
  layer_sizes_.clear();
  layer_sizes_.push_back(obs_dim_ + goal_dim_);
  for (int h : hidden_) layer_sizes_.push_back(h);
  layer_sizes_.push_back(static_cast<int>(act_lo_.size()));
}

Eigen::Index MlpPolicy::parameter_count() const {
  Eigen::Index count = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l)
    count += static_cast<Eigen::Index>(layer_sizes_[l]) * layer_sizes_[l + 1] +
             layer_sizes_[l + 1];
  return count;
}

void MlpPolicy::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& p) {
  if (p.size() != parameter_count())
    throw std::invalid_argument("parameter vector size mismatch");
  params_ = p;
}

void MlpPolicy::init_weights(std::mt19937_64& rng, double scale) {
  params_ = Eigen::VectorXd::Zero(parameter_count());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    Eigen::Index n_in = layer_sizes_[l];
    Eigen::Index n_out = layer_sizes_[l + 1];
    bool output_layer = (l + 2 == layer_sizes_.size());
    double sd = output_layer ? 0.0 : scale / std::sqrt(static_cast<double>(n_in));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < n_in * n_out; ++i)
      params_(offset + i) = sd > 0.0 ? sd * normal(rng) : 0.0;
    offset += n_in * n_out + n_out;  // biases stay zero
  }
}

Action MlpPolicy::act(const State& state, const std::vector<double>& goal_vec) const {
  if (static_cast<int>(state.size()) != obs_dim_)
    throw std::invalid_argument("observation dimension mismatch");
  if (static_cast<int>(goal_vec.size()) != goal_dim_)
    throw std::invalid_argument("goal dimension mismatch");

  Eigen::VectorXd h(obs_dim_ + goal_dim_);
  for (int i = 0; i < obs_dim_; ++i) h(i) = state[i];
  for (int i = 0; i < goal_dim_; ++i) h(obs_dim_ + i) = goal_vec[i];

  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    Eigen::Index n_in = layer_sizes_[l];
    Eigen::Index n_out = layer_sizes_[l + 1];
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offset, n_out, n_in);
    offset += n_in * n_out;
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + offset, n_out);
    offset += n_out;
    h = (w * h + b).array().tanh().matrix();
  }

  Action a(act_lo_.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double u = h(static_cast<Eigen::Index>(i));  // in (-1,1)
    a[i] = act_lo_[i] + 0.5 * (u + 1.0) * (act_hi_[i] - act_lo_[i]);
  }
  return a;
}

json MlpPolicy::to_json() const {
  return {{"format_version", 1},
          {"kind", "policy"},
          {"env", env_id_},
          {"obs_dim", obs_dim_},
          {"goal_dim", goal_dim_},
          {"hidden", hidden_},
          {"activation", "tanh"},
          {"action_lo", act_lo_},
          {"action_hi", act_hi_},
          {"params", std::vector<double>(params_.data(), params_.data() + params_.size())}};
}

MlpPolicy MlpPolicy::from_json(const json& j) {
  if (j.value("kind", "") != "policy")
    throw std::runtime_error("not a policy document");
  MlpPolicy p(j.at("env").get<std::string>(), j.at("obs_dim").get<int>(),
              j.at("goal_dim").get<int>(), j.at("action_lo").get<std::vector<double>>(),
              j.at("action_hi").get<std::vector<double>>(),
              j.at("hidden").get<std::vector<int>>());
  auto params = j.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(params.size()) != p.parameter_count())
    throw std::runtime_error("policy parameter count mismatch");
  p.params_ = Eigen::Map<Eigen::VectorXd>(params.data(),
                                          static_cast<Eigen::Index>(params.size()));
  return p;
}

void MlpPolicy::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_json().dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

MlpPolicy MlpPolicy::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j = json::parse(in);
  return from_json(j);
}

Action MazeOracleController::act(const State& state,
                                 const std::vector<double>& goal_vec) const {
  if (state.size() != 2 || goal_vec.size() != 2)
    throw std::invalid_argument("maze oracle expects 2D state and goal");
  return {std::clamp(goal_vec[0] - state[0], -1.0, 1.0),
          std::clamp(goal_vec[1] - state[1], -1.0, 1.0)};
}

}  // namespace cgem
