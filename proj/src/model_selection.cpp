#include "cgem/model_selection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "cgem/rng.hpp"

namespace cgem {

using nlohmann::json;

json CandidateConfig::to_json() const {
  return {{"name", name}, {"family", to_string(family)}, {"options", options.to_json()}};
}

CandidateConfig CandidateConfig::from_json(const json& j) {
  CandidateConfig c;
  c.family = density_family_from_string(j.at("family").get<std::string>());
  if (j.contains("options")) c.options = DensityOptions::from_json(j.at("options"));
  c.name = j.value("name", to_string(c.family));
  return c;
}

json ModelSelectionReport::to_json() const {
  return {{"format_version", 1},
          {"kind", "model_selection_report"},
          {"configs", config_names},
          {"datasets", dataset_names},
          {"scores", scores},
          {"normalized_scores", normalized},
          {"summed_normalized", summed_normalized},
          {"parameter_counts", parameter_counts},
          {"selected", selected},
          {"selected_name", selected_name}};
}

ModelSelectionReport normalize_and_select(
    const std::vector<std::string>& config_names,
    const std::vector<std::string>& dataset_names,
    const std::vector<std::vector<double>>& scores,
    const std::vector<double>& parameter_counts) {
  const std::size_t n_cfg = config_names.size();
  const std::size_t n_ds = dataset_names.size();
  if (n_cfg == 0) throw std::invalid_argument("no candidate configs");
  if (scores.size() != n_ds) throw std::invalid_argument("score table shape mismatch");
  for (const auto& row : scores)
    if (row.size() != n_cfg) throw std::invalid_argument("score row shape mismatch");

  ModelSelectionReport report;
  report.config_names = config_names;
  report.dataset_names = dataset_names;
  report.scores = scores;
  report.parameter_counts = parameter_counts;
  report.normalized.assign(n_ds, std::vector<double>(n_cfg, 0.0));
  report.summed_normalized.assign(n_cfg, 0.0);

  for (std::size_t d = 0; d < n_ds; ++d) {
    double lo = *std::min_element(scores[d].begin(), scores[d].end());
    double hi = *std::max_element(scores[d].begin(), scores[d].end());
    if (hi > lo) {
      for (std::size_t c = 0; c < n_cfg; ++c) {
        report.normalized[d][c] = (scores[d][c] - lo) / (hi - lo);
        report.summed_normalized[c] += report.normalized[d][c];
      }
    }
    // All-equal scores leave the row at 0 for every config.
  }

  int best = 0;
  for (std::size_t c = 1; c < n_cfg; ++c) {
    double cur = report.summed_normalized[c];
    double top = report.summed_normalized[best];
    if (cur > top ||
        (cur == top && parameter_counts[c] < parameter_counts[best]))
      best = static_cast<int>(c);
  }
  report.selected = best;
  report.selected_name = config_names[best];
  return report;
}

ModelSelectionReport select_model(const std::vector<CandidateConfig>& configs,
                                  const std::vector<SelectionDataset>& datasets,
                                  uint64_t seed) {
  if (configs.size() < 1) throw std::invalid_argument("need at least one config");
  if (datasets.empty()) throw std::invalid_argument("need at least one dataset");
  for (const auto& ds : datasets) {
    if (ds.train.rows() < 2 || ds.eval.rows() < 1)
      throw std::invalid_argument("dataset " + ds.name + " lacks a train/eval split");
  }

  std::vector<std::string> config_names;
  std::vector<double> param_counts(configs.size(), 0.0);
  for (const auto& c : configs) config_names.push_back(c.name);

  std::vector<std::string> dataset_names;
  std::vector<std::vector<double>> scores;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    dataset_names.push_back(datasets[d].name);
    std::vector<double> row;
    for (std::size_t c = 0; c < configs.size(); ++c) {
      auto rng = rng::stream(seed, "select_model", d, c);
      FitResult fit = fit_density_traced(configs[c].family, datasets[d].train,
                                         datasets[d].eval, configs[c].options, rng);
      // AUC over epochs for iterative fits, final held-out score otherwise.
      double score = std::accumulate(fit.heldout_curve.begin(), fit.heldout_curve.end(), 0.0) /
                     static_cast<double>(fit.heldout_curve.size());
      row.push_back(score);
      param_counts[c] = fit.model->parameter_count();
    }
    scores.push_back(std::move(row));
  }
  return normalize_and_select(config_names, dataset_names, scores, param_counts);
}

}  // namespace cgem
