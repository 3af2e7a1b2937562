#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cgem/c3po.hpp"
#include "cgem/env.hpp"

namespace cgem {

struct ExpertTrajectory {
  std::string env_id;
  std::string source;  // "scripted" | "chronogem-branch"
  std::vector<State> states;

  void save_jsonl(const std::string& path) const;
  static ExpertTrajectory load_jsonl(const std::string& path);
};

// Applies the scripted actions from reset; throws if any action is rejected,
// so the stored trajectory is reachable by construction.
ExpertTrajectory script_expert(const Environment& env,
                               const std::vector<Action>& actions,
                               const std::string& source = "scripted");

struct TargetReport {
  std::size_t expert_index = 0;
  double best_abs_reward = 0.0;  // squared distance units
  double best_distance = 0.0;
  bool achieved = false;
  int steps_used = 0;
};

struct TrackingReport {
  std::vector<TargetReport> targets;
  double fraction_achieved = 0.0;
  double mean_best_distance = 0.0;
  uint64_t env_steps = 0;

  nlohmann::json to_json() const;
};

// Tracks every n-th expert state with the controller: per target, run until
// success at eps or the per-target budget, then advance regardless. Targets
// are the expert states at indices min(k*n - 1, L-1) for k = 1..ceil(L/n).
std::pair<Rollout, TrackingReport> zero_shot_imitate(
    const Environment& env, const Controller& controller,
    const ExpertTrajectory& expert, int n_subsample, int per_target_budget,
    double eps);

}  // namespace cgem
