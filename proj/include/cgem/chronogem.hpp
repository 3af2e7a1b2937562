#pragma once

#include <functional>
#include <optional>
#include <string>

#include "cgem/density.hpp"
#include "cgem/env.hpp"
#include "cgem/state_set.hpp"

namespace cgem {

// Predicate deciding whether a candidate state may be kept at resampling
// time; states failing it get weight zero.
using StateFilter = std::function<bool(const std::vector<double>&)>;

StateFilter make_state_filter(const std::string& name);

struct DiffusionConfig {
  int n = 4096;       // population size
  int k = 4;          // branching factor
  int t = 1000;       // horizon
  DensityFamily density = DensityFamily::kHistogram;
  DensityOptions density_options;
  std::string filter_name = "none";
  bool without_replacement = false;
  uint64_t seed = 0;
  int workers = 1;

  nlohmann::json to_json() const;
};

// Draws n_out indices with probability proportional to mask / density,
// computed stably in log space. Masked-out entries are never selected.
// Throws "empty support" when every entry is masked or underflows to zero.
std::vector<Eigen::Index> inverse_density_resample_indices(
    const std::vector<double>& log_densities, const std::vector<double>& weights_mask,
    Eigen::Index n_out, std::mt19937_64& rng, bool without_replacement = false);

StateSet inverse_density_resample(const StateSet& candidates, Eigen::Index n_out,
                                  std::mt19937_64& rng,
                                  bool without_replacement = false);

// One diffusion layer: K uniform actions stepped once from each state.
// Output is state-major (the K children of state i are contiguous) and uses
// per-parent RNG streams so any worker count produces identical results.
StateSet branch(const Environment& env, const StateSet& states, int k,
                uint64_t branch_seed, int workers = 1);

StateSet chronogem_explore(const Environment& env, const DiffusionConfig& config);

}  // namespace cgem
