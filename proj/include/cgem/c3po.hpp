#pragma once

#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cgem/cem.hpp"
#include "cgem/density.hpp"
#include "cgem/env.hpp"
#include "cgem/policy.hpp"
#include "cgem/state_set.hpp"

namespace cgem {

// Goal reward: negative squared distance of the most distant body part.
double goal_reward(const BodyPose& pose, const BodyPose& goal_pose);
double goal_reward_flat(const std::vector<double>& pose_vec,
                        const std::vector<double>& goal_vec);

// Achievement criteria: |goal_reward| strictly below the threshold.
bool success(const BodyPose& pose, const BodyPose& goal_pose, double eps);

struct GoalSet {
  std::string env_id;
  std::string source;                       // provenance: method/seed of the state set
  std::vector<std::vector<double>> train;   // flattened goal poses
  std::vector<std::vector<double>> eval;
  Eigen::MatrixXd eval_states;              // states backing the eval goals

  // Disjoint split: eval rows drawn first, train from the remainder.
  static GoalSet split(const Environment& env, const StateSet& states, int n_train,
                       int n_eval, uint64_t seed);
};

struct Rollout {
  std::vector<double> goal_vec;
  std::vector<State> states;   // s_0 .. s_L
  std::vector<Action> actions; // a_0 .. a_{L-1}
  bool achieved = false;
  int steps = 0;
  double final_reward = 0.0;
  double best_reward = 0.0;  // max goal_reward along the trajectory
};

// Runs the controller toward the goal until success at eps or the horizon.
// A non-positive eps disables early termination.
Rollout rollout(const Environment& env, const Controller& controller,
                const std::vector<double>& goal_vec, double eps, int horizon,
                std::mt19937_64& rng, bool record_trajectory = true);

struct CurriculumState {
  double eps = 0.0;
  double success_rate = 0.0;
  std::vector<std::pair<uint64_t, double>> anneal_history;  // (episode, new eps)
};

// Consumes curriculum rollouts and produces the current controller. update()
// returns the env steps it spent.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual const Controller& controller() const = 0;
  virtual void observe(const Rollout& r) = 0;
  virtual uint64_t update(std::mt19937_64& rng) = 0;
};

class OracleLearner final : public Learner {
 public:
  explicit OracleLearner(std::unique_ptr<Controller> controller)
      : controller_(std::move(controller)) {}
  const Controller& controller() const override { return *controller_; }
  void observe(const Rollout&) override {}
  uint64_t update(std::mt19937_64&) override { return 0; }

 private:
  std::unique_ptr<Controller> controller_;
};

struct CemLearnerConfig {
  CemConfig cem;
  int goals_per_eval = 4;   // minibatch of goals per candidate evaluation
  int update_every = 8;     // episodes between CEM steps
  int horizon = 128;
  uint64_t dataset_capacity = 4096;
  int workers = 1;
};

// Derivative-free learner: CEM over the flat MLP parameter vector, scored by
// the mean end-of-episode goal reward over a goal minibatch drawn from the
// observed rollouts. The minibatch is shared across the population.
class CemLearner final : public Learner {
 public:
  CemLearner(const Environment& env, MlpPolicy policy, CemLearnerConfig config);

  const Controller& controller() const override { return policy_; }
  const MlpPolicy& policy() const { return policy_; }
  void observe(const Rollout& r) override;
  uint64_t update(std::mt19937_64& rng) override;

  // One CEM step on an explicit goal batch; exposed for tests.
  uint64_t update_on_goals(const std::vector<std::vector<double>>& goals,
                           std::mt19937_64& rng);

 private:
  const Environment& env_;
  MlpPolicy policy_;
  CemState dist_;
  CemLearnerConfig cfg_;
  std::deque<std::vector<double>> goal_pool_;
  uint64_t observed_ = 0;
};

struct C3poOptions {
  double eps0 = -1.0;  // <= 0: auto from the 30th percentile of |reward(reset, g)|
  int horizon = 128;
  uint64_t max_episodes = 0;   // 0 = unlimited
  uint64_t max_env_steps = 0;  // 0 = unlimited; at least one must be set
  double success_decay = 0.99;       // EMA decay over episode outcomes
  double success_threshold = 0.9;
  double anneal_factor = 0.99;
  int curve_stride = 25;  // record a training-curve point every this many episodes
};

struct TrainCurvePoint {
  uint64_t episode;
  uint64_t env_steps;
  double eps;
  double success_rate;
};

struct TrainResult {
  CurriculumState curriculum;
  std::vector<TrainCurvePoint> curve;
  uint64_t episodes = 0;
  uint64_t env_steps = 0;

  nlohmann::json to_json() const;
};

double auto_eps0(const Environment& env, const std::vector<std::vector<double>>& goals,
                 double percentile = 0.3);

TrainResult c3po_train(const Environment& env, const GoalSet& goals, Learner& learner,
                       const C3poOptions& opts, uint64_t seed);

struct EvaluationCurve {
  std::vector<double> thresholds;
  std::vector<double> success_rates;
  double auc = 0.0;
  uint64_t env_steps = 0;

  nlohmann::json to_json() const;
};

// One rollout per goal with early termination at the largest threshold;
// success at smaller thresholds from the best reward along the trajectory.
EvaluationCurve evaluate_curve(const Environment& env, const Controller& controller,
                               const std::vector<std::vector<double>>& eval_goals,
                               const std::vector<double>& eps_grid, int horizon,
                               uint64_t seed, int workers = 1);

struct CrossEvalResult {
  std::vector<std::string> sources;
  // curves[policy_source][eval_source]
  std::map<std::string, std::map<std::string, EvaluationCurve>> curves;
  std::map<std::string, double> entropy_by_source;  // of the eval sets
  std::map<std::string, double> ewga_by_policy;

  nlohmann::json to_json() const;
};

struct CrossEvalInputs {
  std::map<std::string, const Controller*> policies_by_source;
  std::map<std::string, const GoalSet*> eval_sets_by_source;
  std::vector<double> eps_grid;
  int horizon = 128;
  DensityFamily entropy_family = DensityFamily::kGaussian;
  DensityOptions entropy_options;
  double entropy_split = 0.8;
  int workers = 1;
};

CrossEvalResult cross_evaluate(const Environment& env, const CrossEvalInputs& inputs,
                               uint64_t seed);

}  // namespace cgem
