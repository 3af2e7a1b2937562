#include <doctest.h>

#include <cmath>

#include "cgem/c3po.hpp"
#include "cgem/chronogem.hpp"
#include "cgem/rng.hpp"

using namespace cgem;

namespace {

GoalSet easy_maze_goals(const MazeEnv& env, int n_train, int n_eval, uint64_t seed) {
  // Goals scattered in free space around the start room.
  StateSet states;
  states.states.resize(n_train + n_eval, 2);
  auto g = rng::stream(seed, "goals");
  Eigen::Index row = 0;
  while (row < states.states.rows()) {
    double x = rng::uniform(g, 5.0, 95.0);
    double y = rng::uniform(g, -95.0, -5.0);
    if (!env.in_free_space(x, y)) continue;
    states.states(row, 0) = x;
    states.states(row, 1) = y;
    ++row;
  }
  states.env_id = env.id();
  states.method = "synthetic";
  return GoalSet::split(env, states, n_train, n_eval, seed);
}

}  // namespace

TEST_CASE("goal reward is the negative worst squared body distance") {
  BodyPose pose = {{{0.0, 0.0}}, {{1.0, 0.0}}};
  BodyPose goal = {{{0.0, 0.0}}, {{1.0, 1.0}}};
  CHECK(goal_reward(pose, goal) == doctest::Approx(-1.0));
  CHECK(goal_reward(pose, pose) == doctest::Approx(0.0));

  // Single body at distance 2: reward -4.
  BodyPose a = {{{0.0, 0.0}}};
  BodyPose b = {{{2.0, 0.0}}};
  CHECK(goal_reward(a, b) == doctest::Approx(-4.0));

  BodyPose mismatched = {{{0.0, 0.0}}};
  CHECK_THROWS_AS(goal_reward(pose, mismatched), std::invalid_argument);
}

TEST_CASE("success uses a strict threshold on |reward|") {
  BodyPose at = {{{0.0, 0.0}}};
  BodyPose goal2 = {{{2.0, 0.0}}};  // reward -4
  CHECK(success(at, at, 0.001));
  CHECK_FALSE(success(at, goal2, 4.0));  // strict <
  CHECK(success(at, goal2, 4.0001));
  // Distance tolerance 0.25 is 0.0625 on the squared reward.
  BodyPose near = {{{0.245, 0.0}}};
  CHECK(std::abs(goal_reward(at, near)) < 0.0625);
  CHECK(success(at, near, 0.0625));
  CHECK_THROWS_AS(success(at, goal2, 0.0), std::invalid_argument);
}

TEST_CASE("success and reward stay coherent on random poses") {
  auto g = rng::stream(1, "fuzz");
  for (int i = 0; i < 500; ++i) {
    BodyPose p = {{{rng::uniform(g, -5, 5), rng::uniform(g, -5, 5)}},
                  {{rng::uniform(g, -5, 5), rng::uniform(g, -5, 5)}}};
    BodyPose q = {{{rng::uniform(g, -5, 5), rng::uniform(g, -5, 5)}},
                  {{rng::uniform(g, -5, 5), rng::uniform(g, -5, 5)}}};
    double eps = rng::uniform(g, 0.01, 50.0);
    CHECK(success(p, q, eps) == (std::abs(goal_reward(p, q)) < eps));
  }
}

TEST_CASE("goal set split is disjoint with the requested sizes") {
  MazeEnv env(MazeSpec::default_spec());
  GoalSet set = easy_maze_goals(env, 100, 20, 3);
  CHECK(set.train.size() == 100);
  CHECK(set.eval.size() == 20);
  CHECK(set.eval_states.rows() == 20);
  for (const auto& e : set.eval)
    for (const auto& t : set.train) CHECK(e != t);
}

TEST_CASE("cem converges on a quadratic toy objective") {
  Eigen::VectorXd target(8);
  target << 1, -2, 3, 0.5, -0.25, 2, -1, 0;
  CemConfig cfg;
  cfg.population = 64;
  cfg.elite_frac = 0.25;
  cfg.init_sigma = 1.0;
  cfg.min_sigma = 1e-4;
  CemState state = CemState::init(Eigen::VectorXd::Zero(8), cfg.init_sigma);
  auto objective = [&](const std::vector<Eigen::VectorXd>& cands) {
    std::vector<double> scores;
    for (const auto& c : cands) scores.push_back(-(c - target).squaredNorm());
    return scores;
  };
  auto g = rng::stream(7, "cem");
  for (int iter = 0; iter < 200; ++iter) cem_step(state, objective, cfg, g);
  CHECK((state.mean - target).norm() < 1e-2);
}

TEST_CASE("cem with elite fraction 1 keeps the mean put under antithetic sampling") {
  CemConfig cfg;
  cfg.population = 32;
  cfg.elite_frac = 1.0;
  cfg.init_sigma = 0.5;
  cfg.antithetic = true;
  CemState state = CemState::init(Eigen::VectorXd::Constant(5, 2.0), cfg.init_sigma);
  auto objective = [&](const std::vector<Eigen::VectorXd>& cands) {
    std::vector<double> scores;
    for (const auto& c : cands) scores.push_back(c.sum());
    return scores;
  };
  auto g = rng::stream(9, "cem");
  cem_step(state, objective, cfg, g);
  CHECK((state.mean - Eigen::VectorXd::Constant(5, 2.0)).norm() < 1e-12);
}

TEST_CASE("cem keeps the distribution when all scores are equal") {
  CemConfig cfg;
  cfg.population = 16;
  CemState state = CemState::init(Eigen::VectorXd::Zero(3), 0.3);
  auto objective = [](const std::vector<Eigen::VectorXd>& cands) {
    return std::vector<double>(cands.size(), 1.0);
  };
  auto g = rng::stream(3, "cem");
  auto info = cem_step(state, objective, cfg, g);
  CHECK(info.degenerate);
  CHECK(state.mean.isZero());
  CHECK(state.sigma(0) == doctest::Approx(0.3));
}

TEST_CASE("cem steps are deterministic under a fixed seed") {
  CemConfig cfg;
  cfg.population = 16;
  auto objective = [](const std::vector<Eigen::VectorXd>& cands) {
    std::vector<double> scores;
    for (const auto& c : cands) scores.push_back(-c.squaredNorm());
    return scores;
  };
  CemState a = CemState::init(Eigen::VectorXd::Ones(4), 0.2);
  CemState b = CemState::init(Eigen::VectorXd::Ones(4), 0.2);
  auto g1 = rng::stream(5, "cem");
  auto g2 = rng::stream(5, "cem");
  cem_step(a, objective, cfg, g1);
  cem_step(b, objective, cfg, g2);
  CHECK(a.mean == b.mean);
  CHECK(a.sigma == b.sigma);
}

TEST_CASE("mlp policy output respects the action box and serializes") {
  MazeEnv env(MazeSpec::default_spec());
  MlpPolicy policy(env.id(), 2, 2, env.action_lo(), env.action_hi());
  auto g = rng::stream(2, "init");
  policy.init_weights(g);
  Eigen::VectorXd noisy = policy.parameters();
  auto g2 = rng::stream(3, "noise");
  std::normal_distribution<double> normal(0.0, 2.0);
  for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy(i) += normal(g2);
  policy.set_parameters(noisy);

  auto probe = rng::stream(4, "probe");
  for (int i = 0; i < 200; ++i) {
    State s = {rng::uniform(probe, -100, 100), rng::uniform(probe, -100, 100)};
    std::vector<double> goal = {rng::uniform(probe, -100, 100),
                                rng::uniform(probe, -100, 100)};
    Action a = policy.act(s, goal);
    CHECK(a[0] >= -1.0);
    CHECK(a[0] <= 1.0);
    CHECK(a[1] >= -1.0);
    CHECK(a[1] <= 1.0);
  }

  MlpPolicy back = MlpPolicy::from_json(policy.to_json());
  CHECK(back.parameters() == policy.parameters());
  CHECK(back.env_id() == "maze");
}

TEST_CASE("zero-initialized policy holds still") {
  MazeEnv env(MazeSpec::default_spec());
  MlpPolicy policy(env.id(), 2, 2, env.action_lo(), env.action_hi());
  auto g = rng::stream(2, "init");
  policy.init_weights(g);
  Action a = policy.act({10.0, -10.0}, {50.0, -50.0});
  CHECK(a[0] == doctest::Approx(0.0));
  CHECK(a[1] == doctest::Approx(0.0));
}

TEST_CASE("curriculum with the maze oracle anneals and keeps its invariants") {
  MazeEnv env(MazeSpec::default_spec());
  GoalSet goals = easy_maze_goals(env, 256, 16, 11);
  OracleLearner learner(std::make_unique<MazeOracleController>());

  C3poOptions opts;
  opts.max_episodes = 2000;
  opts.horizon = 128;
  TrainResult result = c3po_train(env, goals, learner, opts, 11);

  CHECK(result.episodes == 2000);
  CHECK(result.curriculum.anneal_history.size() >= 1);

  // Every anneal multiplies by exactly 0.99 and the history is non-increasing.
  double eps0 = auto_eps0(env, goals.train);
  double expect = eps0;
  double prev = eps0;
  for (const auto& [episode, eps] : result.curriculum.anneal_history) {
    expect *= 0.99;
    CHECK(eps == expect);
    CHECK(eps <= prev);
    prev = eps;
  }
  CHECK(result.curriculum.eps == expect);
}

TEST_CASE("budget of one episode records exactly one rollout") {
  MazeEnv env(MazeSpec::default_spec());
  GoalSet goals = easy_maze_goals(env, 16, 4, 13);
  OracleLearner learner(std::make_unique<MazeOracleController>());
  C3poOptions opts;
  opts.max_episodes = 1;
  TrainResult result = c3po_train(env, goals, learner, opts, 13);
  CHECK(result.episodes == 1);
  CHECK(result.curriculum.anneal_history.size() <= 1);
}

TEST_CASE("curriculum bookkeeping is learner-agnostic") {
  // Same seeds and goals: the curriculum trace depends only on rollout
  // outcomes, so two oracle learners with identical behavior match exactly.
  MazeEnv env(MazeSpec::default_spec());
  GoalSet goals = easy_maze_goals(env, 64, 8, 17);
  C3poOptions opts;
  opts.max_episodes = 500;
  OracleLearner l1(std::make_unique<MazeOracleController>());
  OracleLearner l2(std::make_unique<MazeOracleController>());
  TrainResult r1 = c3po_train(env, goals, l1, opts, 17);
  TrainResult r2 = c3po_train(env, goals, l2, opts, 17);
  CHECK(r1.curriculum.anneal_history == r2.curriculum.anneal_history);
  CHECK(r1.env_steps == r2.env_steps);
}

TEST_CASE("auto eps0 is the 30th percentile of reset-pose rewards") {
  MazeEnv env(MazeSpec::default_spec());
  // Goals at known distances 1..10 from the start (65,-65), so |r| = d^2.
  std::vector<std::vector<double>> goals;
  for (int d = 1; d <= 10; ++d)
    goals.push_back({65.0 + d, -65.0});
  double eps0 = auto_eps0(env, goals, 0.3);
  CHECK(eps0 == doctest::Approx(9.0));  // 3rd smallest of {1,4,9,...}
}

TEST_CASE("evaluate_curve with the oracle reaches every goal at a loose eps") {
  MazeEnv env(MazeSpec::default_spec());
  GoalSet goals = easy_maze_goals(env, 32, 16, 19);
  MazeOracleController oracle;
  std::vector<double> grid = {0.01, 1.0, 25.0, 400.0};
  EvaluationCurve curve = evaluate_curve(env, oracle, goals.eval, grid, 150, 19);
  CHECK(curve.success_rates.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < curve.success_rates.size(); ++i)
    CHECK(curve.success_rates[i] >= curve.success_rates[i - 1]);
  CHECK(curve.auc >= 0.0);
  CHECK(curve.auc <= 1.0);
}

TEST_CASE("random policy fails at tiny thresholds") {
  MazeEnv env(MazeSpec::default_spec());
  GoalSet goals = easy_maze_goals(env, 32, 16, 23);
  MlpPolicy policy(env.id(), 2, 2, env.action_lo(), env.action_hi());
  auto g = rng::stream(23, "init");
  policy.init_weights(g);  // holds still at the start
  std::vector<double> grid = {1e-6};
  EvaluationCurve curve = evaluate_curve(env, policy, goals.eval, grid, 32, 23);
  CHECK(curve.success_rates[0] == doctest::Approx(0.0));
  CHECK(curve.auc == doctest::Approx(0.0));
}

TEST_CASE("cem learner improves goal reaching on easy maze goals") {
  MazeEnv env(MazeSpec::default_spec());
  GoalSet goals = easy_maze_goals(env, 128, 32, 29);

  MlpPolicy policy(env.id(), 2, 2, env.action_lo(), env.action_hi(), {16, 16});
  auto g = rng::stream(29, "init");
  policy.init_weights(g);

  CemLearnerConfig cfg;
  cfg.cem.population = 24;
  cfg.cem.elite_frac = 0.25;
  cfg.cem.init_sigma = 0.2;
  cfg.cem.min_sigma = 0.02;
  cfg.goals_per_eval = 4;
  cfg.update_every = 4;
  cfg.horizon = 64;
  cfg.workers = 4;
  CemLearner learner(env, policy, cfg);

  std::vector<double> grid = {100.0};
  EvaluationCurve before = evaluate_curve(env, learner.controller(), goals.eval, grid, 64, 29);

  C3poOptions opts;
  opts.max_episodes = 200;
  opts.horizon = 64;
  TrainResult result = c3po_train(env, goals, learner, opts, 29);
  CHECK(result.env_steps > 0);

  EvaluationCurve after = evaluate_curve(env, learner.controller(), goals.eval, grid, 64, 29);
  CHECK(after.success_rates[0] > before.success_rates[0]);
}

TEST_CASE("cross_evaluate produces a full matrix with EWGA per policy") {
  MazeEnv env(MazeSpec::default_spec());
  GoalSet a = easy_maze_goals(env, 128, 110, 31);
  GoalSet b = easy_maze_goals(env, 128, 110, 37);
  MazeOracleController oracle;

  CrossEvalInputs inputs;
  inputs.policies_by_source = {{"a", &oracle}, {"b", &oracle}};
  inputs.eval_sets_by_source = {{"a", &a}, {"b", &b}};
  inputs.eps_grid = {1.0, 25.0, 100.0};
  inputs.horizon = 150;
  CrossEvalResult result = cross_evaluate(env, inputs, 31);

  REQUIRE(result.curves.size() == 2);
  REQUIRE(result.curves.at("a").size() == 2);
  // Identical policies give identical rows.
  CHECK(result.curves.at("a").at("a").success_rates ==
        result.curves.at("b").at("a").success_rates);
  CHECK(result.ewga_by_policy.at("a") == doctest::Approx(result.ewga_by_policy.at("b")));
  // Single-source case: EWGA equals the AUC.
  CrossEvalInputs single;
  single.policies_by_source = {{"a", &oracle}};
  single.eval_sets_by_source = {{"a", &a}};
  single.eps_grid = {1.0, 25.0, 100.0};
  single.horizon = 150;
  CrossEvalResult one = cross_evaluate(env, single, 31);
  CHECK(one.ewga_by_policy.at("a") == doctest::Approx(one.curves.at("a").at("a").auc));
}
