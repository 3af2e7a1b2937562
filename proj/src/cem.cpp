#include "cgem/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cgem {

CemState CemState::init(const Eigen::Ref<const Eigen::VectorXd>& mean, double sigma) {
  CemState s;
  s.mean = mean;
  s.sigma = Eigen::VectorXd::Constant(mean.size(), sigma);
  return s;
}

CemStepInfo cem_step(CemState& state, const CemObjective& objective,
                     const CemConfig& config, std::mt19937_64& rng) {
  if (config.population < 2) throw std::invalid_argument("population must be >= 2");
  if (config.elite_frac <= 0.0 || config.elite_frac > 1.0)
    throw std::invalid_argument("elite_frac must be in (0,1]");

  const Eigen::Index dim = state.mean.size();
  const int pop = config.population;
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Eigen::VectorXd> candidates;
  candidates.reserve(pop);
  if (config.antithetic) {
    for (int p = 0; p < pop; p += 2) {
      Eigen::VectorXd z(dim);
      for (Eigen::Index i = 0; i < dim; ++i) z(i) = normal(rng);
      candidates.push_back(state.mean + state.sigma.cwiseProduct(z));
      if (static_cast<int>(candidates.size()) < pop)
        candidates.push_back(state.mean - state.sigma.cwiseProduct(z));
    }
  } else {
    for (int p = 0; p < pop; ++p) {
      Eigen::VectorXd z(dim);
      for (Eigen::Index i = 0; i < dim; ++i) z(i) = normal(rng);
      candidates.push_back(state.mean + state.sigma.cwiseProduct(z));
    }
  }

  std::vector<double> scores = objective(candidates);
  if (scores.size() != candidates.size())
    throw std::runtime_error("objective returned wrong number of scores");

  CemStepInfo info;
  info.best_score = *std::max_element(scores.begin(), scores.end());
  double min_score = *std::min_element(scores.begin(), scores.end());
  if (info.best_score == min_score) {
    // No elite signal; keep the current distribution.
    info.degenerate = true;
    info.elite_mean_score = info.best_score;
    return info;
  }

  int n_elite = std::max(1, static_cast<int>(std::lround(config.elite_frac * pop)));
  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });

  Eigen::VectorXd elite_mean = Eigen::VectorXd::Zero(dim);
  for (int e = 0; e < n_elite; ++e) elite_mean += candidates[order[e]];
  elite_mean /= static_cast<double>(n_elite);

  Eigen::VectorXd elite_var = Eigen::VectorXd::Zero(dim);
  for (int e = 0; e < n_elite; ++e) {
    Eigen::VectorXd diff = candidates[order[e]] - elite_mean;
    elite_var += diff.cwiseProduct(diff);
  }
  elite_var /= static_cast<double>(n_elite);

  double score_acc = 0.0;
  for (int e = 0; e < n_elite; ++e) score_acc += scores[order[e]];
  info.elite_mean_score = score_acc / n_elite;

  state.mean = (1.0 - config.mean_smoothing) * state.mean +
               config.mean_smoothing * elite_mean;
  Eigen::VectorXd new_sigma =
      ((1.0 - config.sigma_smoothing) * state.sigma +
       config.sigma_smoothing * elite_var.cwiseSqrt()) *
      config.sigma_decay;
  state.sigma = new_sigma.cwiseMax(config.min_sigma);
  return info;
}

}  // namespace cgem
