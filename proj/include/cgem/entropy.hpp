#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cgem/density.hpp"

namespace cgem {

struct EntropyReport {
  std::string family;
  Eigen::Index n_fit = 0;
  Eigen::Index n_eval = 0;
  double value = 0.0;  // nats
  std::vector<double> per_seed;

  nlohmann::json to_json() const;
};

// Cross-entropy upper bound: fit a density on a split of the states and
// report the negative mean log-density over the held-out remainder.
EntropyReport cross_entropy_upper_bound(const Eigen::Ref<const Eigen::MatrixXd>& states,
                                        DensityFamily family,
                                        const DensityOptions& opts,
                                        double split_fraction, uint64_t seed);

// Median over seeds, per-seed values retained in the report.
EntropyReport cross_entropy_multi_seed(const Eigen::Ref<const Eigen::MatrixXd>& states,
                                       DensityFamily family, const DensityOptions& opts,
                                       double split_fraction, uint64_t seed,
                                       int n_seeds);

struct FrequencyGrid {
  std::array<double, 2> lo{0, 0};
  std::array<double, 2> hi{0, 0};
  int bins = 0;
  std::vector<uint64_t> counts;  // row-major, index = iy * bins + ix
  uint64_t total = 0;
  uint64_t clamped = 0;  // states outside bounds, counted in edge cells

  uint64_t count(int ix, int iy) const {
    return counts[static_cast<std::size_t>(iy) * bins + ix];
  }
  double log_frequency(int ix, int iy) const;

  nlohmann::json to_json() const;
  std::string to_csv() const;
  // P2 PGM, maxval 255, row-major; cells scaled by the max log-frequency.
  std::string to_pgm() const;
};

FrequencyGrid frequency_grid(const Eigen::Ref<const Eigen::MatrixXd>& states,
                             std::array<int, 2> projection, std::array<double, 2> lo,
                             std::array<double, 2> hi, int bins);

// Exponential-entropy-weighted mean of AUCs; weights computed stably.
double ewga(const std::map<std::string, double>& auc_by_set,
            const std::map<std::string, double>& entropy_by_set);

}  // namespace cgem
