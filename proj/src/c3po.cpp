#include "cgem/c3po.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cgem/entropy.hpp"
#include "cgem/parallel.hpp"
#include "cgem/rng.hpp"

namespace cgem {

using nlohmann::json;

double goal_reward(const BodyPose& pose, const BodyPose& goal_pose) {
  if (pose.size() != goal_pose.size())
    throw std::invalid_argument("body count mismatch between pose and goal");
  if (pose.empty()) throw std::invalid_argument("empty pose");
  double worst = 0.0;
  for (std::size_t i = 0; i < pose.size(); ++i) {
    double dx = pose[i][0] - goal_pose[i][0];
    double dy = pose[i][1] - goal_pose[i][1];
    worst = std::max(worst, dx * dx + dy * dy);
  }
  return -worst;
}

double goal_reward_flat(const std::vector<double>& pose_vec,
                        const std::vector<double>& goal_vec) {
  if (pose_vec.size() != goal_vec.size())
    throw std::invalid_argument("body count mismatch between pose and goal");
  if (pose_vec.empty() || pose_vec.size() % 2 != 0)
    throw std::invalid_argument("pose vector must hold 2D body positions");
  double worst = 0.0;
  for (std::size_t i = 0; i < pose_vec.size(); i += 2) {
    double dx = pose_vec[i] - goal_vec[i];
    double dy = pose_vec[i + 1] - goal_vec[i + 1];
    worst = std::max(worst, dx * dx + dy * dy);
  }
  return -worst;
}

bool success(const BodyPose& pose, const BodyPose& goal_pose, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  return std::abs(goal_reward(pose, goal_pose)) < eps;
}

GoalSet GoalSet::split(const Environment& env, const StateSet& states, int n_train,
                       int n_eval, uint64_t seed) {
  const Eigen::Index n = states.states.rows();
  if (n < 2) throw std::invalid_argument("need at least 2 states to split goals");
  if (n_eval < 1 || n_train < 1)
    throw std::invalid_argument("goal split sizes must be >= 1");
  auto stream = rng::stream(seed, "goalset.split");
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    auto j = static_cast<Eigen::Index>(rng::uniform_index(stream, i + 1));
    std::swap(perm[i], perm[j]);
  }
  Eigen::Index eval_count = std::min<Eigen::Index>(n_eval, n / 2);
  Eigen::Index train_count = std::min<Eigen::Index>(n_train, n - eval_count);

  GoalSet set;
  set.env_id = states.env_id;
  set.source = states.method + ":" + std::to_string(states.seed);
  set.eval_states.resize(eval_count, states.states.cols());
  for (Eigen::Index i = 0; i < eval_count; ++i) {
    set.eval_states.row(i) = states.states.row(perm[i]);
    set.eval.push_back(env.goal_vector(states.row(perm[i])));
  }
  for (Eigen::Index i = 0; i < train_count; ++i)
    set.train.push_back(env.goal_vector(states.row(perm[eval_count + i])));
  return set;
}

Rollout rollout(const Environment& env, const Controller& controller,
                const std::vector<double>& goal_vec, double eps, int horizon,
                std::mt19937_64& rng, bool record_trajectory) {
  Rollout r;
  r.goal_vec = goal_vec;
  State s = env.reset(rng);
  double reward = goal_reward_flat(env.goal_vector(s), goal_vec);
  r.best_reward = reward;
  if (record_trajectory) r.states.push_back(s);
  if (eps > 0.0 && std::abs(reward) < eps) {
    r.achieved = true;
    r.final_reward = reward;
    return r;
  }
  for (int t = 0; t < horizon; ++t) {
    Action a = controller.act(s, goal_vec);
    s = env.step(s, a);
    ++r.steps;
    if (record_trajectory) {
      r.actions.push_back(a);
      r.states.push_back(s);
    }
    reward = goal_reward_flat(env.goal_vector(s), goal_vec);
    r.best_reward = std::max(r.best_reward, reward);
    if (eps > 0.0 && std::abs(reward) < eps) {
      r.achieved = true;
      break;
    }
  }
  r.final_reward = reward;
  return r;
}

CemLearner::CemLearner(const Environment& env, MlpPolicy policy, CemLearnerConfig config)
    : env_(env), policy_(std::move(policy)), cfg_(std::move(config)) {
  dist_ = CemState::init(policy_.parameters(), cfg_.cem.init_sigma);
}

void CemLearner::observe(const Rollout& r) {
  goal_pool_.push_back(r.goal_vec);
  while (goal_pool_.size() > cfg_.dataset_capacity) goal_pool_.pop_front();
  ++observed_;
}

uint64_t CemLearner::update(std::mt19937_64& rng) {
  if (goal_pool_.empty()) return 0;
  if (observed_ % static_cast<uint64_t>(std::max(1, cfg_.update_every)) != 0) return 0;
  std::vector<std::vector<double>> goals;
  int batch = std::min<int>(cfg_.goals_per_eval, static_cast<int>(goal_pool_.size()));
  for (int g = 0; g < batch; ++g)
    goals.push_back(goal_pool_[rng::uniform_index(rng, goal_pool_.size())]);
  return update_on_goals(goals, rng);
}

uint64_t CemLearner::update_on_goals(const std::vector<std::vector<double>>& goals,
                                     std::mt19937_64& rng) {
  if (goals.empty()) throw std::invalid_argument("empty goal batch");
  uint64_t steps = 0;
  auto objective = [&](const std::vector<Eigen::VectorXd>& candidates) {
    std::vector<double> scores(candidates.size());
    parallel_for(candidates.size(), cfg_.workers, [&](std::size_t c) {
      MlpPolicy candidate = policy_;
      candidate.set_parameters(candidates[c]);
      std::mt19937_64 local(0);  // rollouts here are fully deterministic
      double acc = 0.0;
      for (const auto& goal : goals) {
        Rollout r = rollout(env_, candidate, goal, 0.0, cfg_.horizon, local,
                            /*record_trajectory=*/false);
        acc += r.final_reward;
      }
      scores[c] = acc / static_cast<double>(goals.size());
    });
    steps += static_cast<uint64_t>(candidates.size()) *
             static_cast<uint64_t>(goals.size()) * static_cast<uint64_t>(cfg_.horizon);
    return scores;
  };
  cem_step(dist_, objective, cfg_.cem, rng);
  policy_.set_parameters(dist_.mean);
  return steps;
}

double auto_eps0(const Environment& env, const std::vector<std::vector<double>>& goals,
                 double percentile) {
  if (goals.empty()) throw std::invalid_argument("empty goal set");
  std::mt19937_64 reset_rng(0);
  State s0 = env.reset(reset_rng);
  std::vector<double> mags;
  mags.reserve(goals.size());
  auto pose0 = env.goal_vector(s0);
  for (const auto& g : goals) mags.push_back(std::abs(goal_reward_flat(pose0, g)));
  std::sort(mags.begin(), mags.end());
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(percentile * static_cast<double>(mags.size())));
  rank = std::clamp<std::size_t>(rank, 1, mags.size());
  double eps0 = mags[rank - 1];
  return std::max(eps0, 1e-6);
}

json TrainResult::to_json() const {
  json history = json::array();
  for (const auto& [episode, eps] : curriculum.anneal_history)
    history.push_back({{"episode", episode}, {"eps", eps}});
  json curve_j = json::array();
  for (const auto& p : curve)
    curve_j.push_back({{"episode", p.episode},
                       {"env_steps", p.env_steps},
                       {"eps", p.eps},
                       {"success_rate", p.success_rate}});
  return {{"format_version", 1},
          {"kind", "train_report"},
          {"episodes", episodes},
          {"env_steps", env_steps},
          {"final_eps", curriculum.eps},
          {"final_success_rate", curriculum.success_rate},
          {"anneal_history", history},
          {"curve", curve_j}};
}

TrainResult c3po_train(const Environment& env, const GoalSet& goals, Learner& learner,
                       const C3poOptions& opts, uint64_t seed) {
  if (goals.train.empty()) throw std::invalid_argument("empty training goal set");
  if (opts.max_episodes == 0 && opts.max_env_steps == 0)
    throw std::invalid_argument("a training budget is required");
  if (goals.env_id != env.id())
    throw std::invalid_argument("env mismatch between goal set and environment");

  TrainResult result;
  result.curriculum.eps =
      opts.eps0 > 0.0 ? opts.eps0 : auto_eps0(env, goals.train);

  uint64_t episode = 0;
  while (true) {
    if (opts.max_episodes > 0 && episode >= opts.max_episodes) break;
    if (opts.max_env_steps > 0 && result.env_steps >= opts.max_env_steps) break;

    auto goal_rng = rng::stream(seed, "c3po.goal", episode);
    const auto& goal = goals.train[rng::uniform_index(goal_rng, goals.train.size())];

    auto episode_rng = rng::stream(seed, "c3po.episode", episode);
    Rollout r = rollout(env, learner.controller(), goal, result.curriculum.eps,
                        opts.horizon, episode_rng, /*record_trajectory=*/false);
    result.env_steps += static_cast<uint64_t>(r.steps);
    learner.observe(r);

    double outcome = r.achieved ? 1.0 : 0.0;
    result.curriculum.success_rate =
        opts.success_decay * result.curriculum.success_rate +
        (1.0 - opts.success_decay) * outcome;
    if (result.curriculum.success_rate > opts.success_threshold) {
      result.curriculum.eps *= opts.anneal_factor;
      result.curriculum.anneal_history.emplace_back(episode, result.curriculum.eps);
      result.curriculum.success_rate = 0.0;
    }

    auto learner_rng = rng::stream(seed, "c3po.learner", episode);
    try {
      result.env_steps += learner.update(learner_rng);
    } catch (const std::exception& e) {
      throw std::runtime_error("learner update failed at episode " +
                               std::to_string(episode) + ": " + e.what());
    }

    if (opts.curve_stride > 0 &&
        episode % static_cast<uint64_t>(opts.curve_stride) == 0)
      result.curve.push_back({episode, result.env_steps, result.curriculum.eps,
                              result.curriculum.success_rate});
    ++episode;
  }
  result.episodes = episode;
  return result;
}

json EvaluationCurve::to_json() const {
  return {{"format_version", 1},
          {"kind", "evaluation_curve"},
          {"thresholds", thresholds},
          {"success_rates", success_rates},
          {"auc", auc},
          {"env_steps", env_steps}};
}

EvaluationCurve evaluate_curve(const Environment& env, const Controller& controller,
                               const std::vector<std::vector<double>>& eval_goals,
                               const std::vector<double>& eps_grid, int horizon,
                               uint64_t seed, int workers) {
  if (eps_grid.empty()) throw std::invalid_argument("empty eps grid");
  if (!std::is_sorted(eps_grid.begin(), eps_grid.end()))
    throw std::invalid_argument("eps grid must be sorted ascending");
  if (eval_goals.empty()) throw std::invalid_argument("empty eval goal set");

  double eps_max = eps_grid.back();
  std::vector<double> best(eval_goals.size());
  std::vector<uint64_t> steps(eval_goals.size());
  parallel_for(eval_goals.size(), workers, [&](std::size_t g) {
    auto stream = rng::stream(seed, "eval.rollout", g);
    Rollout r = rollout(env, controller, eval_goals[g], eps_max, horizon, stream,
                        /*record_trajectory=*/false);
    best[g] = std::abs(r.best_reward);
    steps[g] = static_cast<uint64_t>(r.steps);
  });

  EvaluationCurve curve;
  for (uint64_t s : steps) curve.env_steps += s;
  curve.thresholds = eps_grid;
  curve.success_rates.resize(eps_grid.size());
  for (std::size_t e = 0; e < eps_grid.size(); ++e) {
    std::size_t hits = 0;
    for (double b : best) hits += (b < eps_grid[e]) ? 1 : 0;
    curve.success_rates[e] = static_cast<double>(hits) / eval_goals.size();
  }

  double range = eps_grid.back() - eps_grid.front();
  if (eps_grid.size() < 2 || range <= 0.0) {
    curve.auc = curve.success_rates.back();
  } else {
    double area = 0.0;
    for (std::size_t e = 0; e + 1 < eps_grid.size(); ++e)
      area += 0.5 * (curve.success_rates[e] + curve.success_rates[e + 1]) *
              (eps_grid[e + 1] - eps_grid[e]);
    curve.auc = area / range;
  }
  return curve;
}

json CrossEvalResult::to_json() const {
  json curves_j = json::object();
  for (const auto& [policy_source, row] : curves) {
    json row_j = json::object();
    for (const auto& [eval_source, curve] : row) row_j[eval_source] = curve.to_json();
    curves_j[policy_source] = row_j;
  }
  return {{"format_version", 1},
          {"kind", "cross_eval"},
          {"sources", sources},
          {"curves", curves_j},
          {"entropy_by_source", entropy_by_source},
          {"ewga_by_policy", ewga_by_policy}};
}

CrossEvalResult cross_evaluate(const Environment& env, const CrossEvalInputs& inputs,
                               uint64_t seed) {
  if (inputs.policies_by_source.empty() || inputs.eval_sets_by_source.empty())
    throw std::invalid_argument("cross-evaluation needs policies and eval sets");

  CrossEvalResult result;
  for (const auto& [name, set] : inputs.eval_sets_by_source) {
    result.sources.push_back(name);
    auto report = cross_entropy_upper_bound(set->eval_states, inputs.entropy_family,
                                            inputs.entropy_options,
                                            inputs.entropy_split,
                                            rng::derive(seed, "crosseval.entropy",
                                                        rng::fnv1a64(name)));
    result.entropy_by_source[name] = report.value;
  }

  for (const auto& [policy_name, controller] : inputs.policies_by_source) {
    std::map<std::string, double> auc_by_set;
    for (const auto& [set_name, set] : inputs.eval_sets_by_source) {
      auto curve = evaluate_curve(env, *controller, set->eval, inputs.eps_grid,
                                  inputs.horizon,
                                  rng::derive(seed, "crosseval.curve",
                                              rng::fnv1a64(policy_name),
                                              rng::fnv1a64(set_name)),
                                  inputs.workers);
      auc_by_set[set_name] = curve.auc;
      result.curves[policy_name][set_name] = curve;
    }
    result.ewga_by_policy[policy_name] = ewga(auc_by_set, result.entropy_by_source);
  }
  return result;
}

}  // namespace cgem
