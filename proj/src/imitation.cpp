#include "cgem/imitation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cgem {

using nlohmann::json;

void ExpertTrajectory::save_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  json header = {{"format_version", 1},
                 {"kind", "expert_trajectory"},
                 {"env", env_id},
                 {"source", source},
                 {"n", states.size()},
                 {"d", states.empty() ? 0 : states[0].size()}};
  out << header.dump() << "\n";
  for (const auto& s : states) {
    json rec;
    rec["v"] = s;
    out << rec.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ExpertTrajectory ExpertTrajectory::load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory file: " + path);
  json header = json::parse(line);
  if (header.value("kind", "") != "expert_trajectory")
    throw std::runtime_error("not an expert trajectory file: " + path);
  ExpertTrajectory traj;
  traj.env_id = header.value("env", "");
  traj.source = header.value("source", "");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    traj.states.push_back(rec.at("v").get<State>());
  }
  if (traj.states.empty()) throw std::runtime_error("trajectory has no states");
  return traj;
}

ExpertTrajectory script_expert(const Environment& env,
                               const std::vector<Action>& actions,
                               const std::string& source) {
  ExpertTrajectory traj;
  traj.env_id = env.id();
  traj.source = source;
  std::mt19937_64 rng(0);
  State s = env.reset(rng);
  traj.states.push_back(s);
  for (const auto& a : actions) {
    s = env.step(s, a);
    traj.states.push_back(s);
  }
  return traj;
}

json TrackingReport::to_json() const {
  json targets_j = json::array();
  for (const auto& t : targets)
    targets_j.push_back({{"expert_index", t.expert_index},
                         {"best_abs_reward", t.best_abs_reward},
                         {"best_distance", t.best_distance},
                         {"achieved", t.achieved},
                         {"steps_used", t.steps_used}});
  return {{"format_version", 1},
          {"kind", "tracking_report"},
          {"targets", targets_j},
          {"fraction_achieved", fraction_achieved},
          {"mean_best_distance", mean_best_distance},
          {"env_steps", env_steps}};
}

std::pair<Rollout, TrackingReport> zero_shot_imitate(
    const Environment& env, const Controller& controller,
    const ExpertTrajectory& expert, int n_subsample, int per_target_budget,
    double eps) {
  if (n_subsample < 1) throw std::invalid_argument("n_subsample must be >= 1");
  if (per_target_budget < 1)
    throw std::invalid_argument("per_target_budget must be >= 1");
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  if (expert.env_id != env.id())
    throw std::invalid_argument("env mismatch between policy env and expert");
  const std::size_t length = expert.states.size();
  if (length == 0) throw std::invalid_argument("empty expert trajectory");

  std::vector<std::size_t> target_indices;
  std::size_t n_targets =
      (length + static_cast<std::size_t>(n_subsample) - 1) / n_subsample;
  for (std::size_t k = 1; k <= n_targets; ++k)
    target_indices.push_back(std::min(k * static_cast<std::size_t>(n_subsample) - 1,
                                      length - 1));

  Rollout r;
  TrackingReport report;
  std::mt19937_64 rng(0);
  State s = env.reset(rng);
  r.states.push_back(s);

  std::size_t achieved = 0;
  double distance_acc = 0.0;
  for (std::size_t idx : target_indices) {
    auto target_vec = env.goal_vector(expert.states[idx]);
    TargetReport t;
    t.expert_index = idx;
    t.best_abs_reward = std::abs(goal_reward_flat(env.goal_vector(s), target_vec));
    for (int step = 0; step < per_target_budget; ++step) {
      if (t.best_abs_reward < eps) break;
      Action a = controller.act(s, target_vec);
      s = env.step(s, a);
      ++t.steps_used;
      ++report.env_steps;
      r.states.push_back(s);
      r.actions.push_back(a);
      double abs_reward = std::abs(goal_reward_flat(env.goal_vector(s), target_vec));
      t.best_abs_reward = std::min(t.best_abs_reward, abs_reward);
    }
    t.achieved = t.best_abs_reward < eps;
    t.best_distance = std::sqrt(t.best_abs_reward);
    achieved += t.achieved ? 1 : 0;
    distance_acc += t.best_distance;
    report.targets.push_back(t);
  }

  report.fraction_achieved =
      static_cast<double>(achieved) / static_cast<double>(report.targets.size());
  report.mean_best_distance = distance_acc / static_cast<double>(report.targets.size());

  r.goal_vec = env.goal_vector(expert.states[target_indices.back()]);
  r.steps = static_cast<int>(report.env_steps);
  r.achieved = report.targets.back().achieved;
  double final_reward = goal_reward_flat(env.goal_vector(s), r.goal_vec);
  r.final_reward = final_reward;
  r.best_reward = -report.targets.back().best_abs_reward;
  return {std::move(r), std::move(report)};
}

}  // namespace cgem
