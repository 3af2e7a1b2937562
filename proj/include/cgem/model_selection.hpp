#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cgem/density.hpp"

namespace cgem {

struct CandidateConfig {
  std::string name;
  DensityFamily family = DensityFamily::kGaussian;
  DensityOptions options;

  nlohmann::json to_json() const;
  static CandidateConfig from_json(const nlohmann::json& j);
};

struct SelectionDataset {
  std::string name;
  Eigen::MatrixXd train;
  Eigen::MatrixXd eval;
};

struct ModelSelectionReport {
  std::vector<std::string> config_names;
  std::vector<std::string> dataset_names;
  // scores[dataset][config]: held-out mean log-likelihood (AUC over epochs
  // for iterative fits).
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<double>> normalized;  // min-max per dataset
  std::vector<double> summed_normalized;        // per config
  std::vector<double> parameter_counts;         // per config, tie-break key
  int selected = -1;
  std::string selected_name;

  nlohmann::json to_json() const;
};

// Min-max normalizes each dataset's row of scores into [0,1] (all-equal rows
// contribute 0 to every config), sums across datasets, and picks the argmax;
// ties broken by smaller parameter count.
ModelSelectionReport normalize_and_select(
    const std::vector<std::string>& config_names,
    const std::vector<std::string>& dataset_names,
    const std::vector<std::vector<double>>& scores,
    const std::vector<double>& parameter_counts);

ModelSelectionReport select_model(const std::vector<CandidateConfig>& configs,
                                  const std::vector<SelectionDataset>& datasets,
                                  uint64_t seed);

}  // namespace cgem
