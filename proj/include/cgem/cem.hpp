#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace cgem {

struct CemConfig {
  int population = 48;
  double elite_frac = 0.25;
  double init_sigma = 0.1;
  double sigma_decay = 1.0;     // multiplicative per step
  double min_sigma = 0.003;
  double mean_smoothing = 1.0;  // 1 = replace mean by elite mean
  double sigma_smoothing = 0.5; // 1 = replace sigma by elite std
  bool antithetic = true;       // sample perturbations in +/- pairs
};

struct CemState {
  Eigen::VectorXd mean;
  Eigen::VectorXd sigma;

  static CemState init(const Eigen::Ref<const Eigen::VectorXd>& mean, double sigma);
};

// Scores a batch of candidate parameter vectors (higher is better).
using CemObjective =
    std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)>;

struct CemStepInfo {
  double best_score = 0.0;
  double elite_mean_score = 0.0;
  bool degenerate = false;  // all scores equal; distribution kept as-is
};

// One cross-entropy-method step: sample the population, score it, refit mean
// and sigma on the elite set.
CemStepInfo cem_step(CemState& state, const CemObjective& objective,
                     const CemConfig& config, std::mt19937_64& rng);

}  // namespace cgem
