#include "cgem/chronogem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cgem/parallel.hpp"
#include "cgem/rng.hpp"

namespace cgem {

using nlohmann::json;

StateFilter make_state_filter(const std::string& name) {
  if (name.empty() || name == "none") return nullptr;
  if (name == "x_nonnegative")
    return [](const std::vector<double>& s) { return s[0] >= 0.0; };
  if (name == "y_nonnegative")
    return [](const std::vector<double>& s) { return s[1] >= 0.0; };
  throw std::invalid_argument("unknown state filter: " + name);
}

json DiffusionConfig::to_json() const {
  return {{"n", n},
          {"k", k},
          {"t", t},
          {"density", to_string(density)},
          {"density_options", density_options.to_json()},
          {"filter", filter_name},
          {"without_replacement", without_replacement},
          {"seed", seed},
          {"workers", workers}};
}

std::vector<Eigen::Index> inverse_density_resample_indices(
    const std::vector<double>& log_densities, const std::vector<double>& weights_mask,
    Eigen::Index n_out, std::mt19937_64& rng, bool without_replacement) {
  const std::size_t n = log_densities.size();
  if (n == 0) throw std::invalid_argument("empty candidate set");
  if (!weights_mask.empty() && weights_mask.size() != n)
    throw std::invalid_argument("mask size mismatch");
  if (n_out < 1) throw std::invalid_argument("n_out must be >= 1");

  // log weight = -log density; subtract the max before exponentiating.
  double max_lw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!weights_mask.empty() && weights_mask[i] <= 0.0) continue;
    max_lw = std::max(max_lw, -log_densities[i]);
  }
  if (!std::isfinite(max_lw)) throw std::runtime_error("empty support");

  std::vector<double> w(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mask = weights_mask.empty() ? 1.0 : weights_mask[i];
    if (mask <= 0.0) continue;
    double wi = mask * std::exp(-log_densities[i] - max_lw);
    if (wi < 1e-300) wi = 0.0;
    w[i] = wi;
    total += wi;
  }
  if (total <= 0.0) throw std::runtime_error("empty support");

  std::vector<Eigen::Index> picks;
  picks.reserve(static_cast<std::size_t>(n_out));

  if (!without_replacement) {
    std::vector<double> cum(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += w[i];
      cum[i] = acc;
    }
    for (Eigen::Index s = 0; s < n_out; ++s) {
      double u = rng::uniform(rng) * acc;
      auto it = std::upper_bound(cum.begin(), cum.end(), u);
      std::size_t idx = std::min(n - 1, static_cast<std::size_t>(it - cum.begin()));
      // Rounding at the top end can land on a zero-weight tail entry; step
      // back to the last entry with mass.
      while (w[idx] == 0.0 && idx > 0) --idx;
      picks.push_back(static_cast<Eigen::Index>(idx));
    }
    return picks;
  }

  // Without replacement: Efraimidis-Stirakis keys, top n_out.
  std::size_t support = 0;
  for (double wi : w) support += (wi > 0.0) ? 1 : 0;
  if (static_cast<std::size_t>(n_out) > support)
    throw std::invalid_argument("n_out exceeds support for without-replacement draw");
  std::vector<std::pair<double, Eigen::Index>> keys;
  keys.reserve(support);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] <= 0.0) continue;
    double u = std::max(rng::uniform(rng), 1e-300);
    keys.emplace_back(std::log(u) / w[i], static_cast<Eigen::Index>(i));
  }
  std::partial_sort(keys.begin(), keys.begin() + n_out, keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  for (Eigen::Index s = 0; s < n_out; ++s) picks.push_back(keys[s].second);
  return picks;
}

StateSet inverse_density_resample(const StateSet& candidates, Eigen::Index n_out,
                                  std::mt19937_64& rng, bool without_replacement) {
  if (candidates.log_densities.size() !=
      static_cast<std::size_t>(candidates.states.rows()))
    throw std::invalid_argument("candidates lack aligned log-densities");
  auto picks = inverse_density_resample_indices(candidates.log_densities,
                                                candidates.weights, n_out, rng,
                                                without_replacement);
  StateSet out;
  out.states.resize(n_out, candidates.states.cols());
  out.log_densities.resize(static_cast<std::size_t>(n_out));
  for (Eigen::Index s = 0; s < n_out; ++s) {
    out.states.row(s) = candidates.states.row(picks[s]);
    out.log_densities[static_cast<std::size_t>(s)] =
        candidates.log_densities[static_cast<std::size_t>(picks[s])];
  }
  out.horizon = candidates.horizon;
  out.env_id = candidates.env_id;
  out.method = candidates.method;
  out.seed = candidates.seed;
  out.env_steps = candidates.env_steps;
  out.config = candidates.config;
  return out;
}

StateSet branch(const Environment& env, const StateSet& states, int k,
                uint64_t branch_seed, int workers) {
  if (states.states.rows() == 0) throw std::invalid_argument("cannot branch empty set");
  if (k < 1) throw std::invalid_argument("branching factor must be >= 1");
  const Eigen::Index n = states.states.rows();
  const Eigen::Index d = states.states.cols();

  StateSet out;
  out.states.resize(n * k, d);
  out.horizon = states.horizon + 1;
  out.env_id = states.env_id;

  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
    auto stream = rng::stream(branch_seed, "branch", i);
    State parent = states.row(static_cast<Eigen::Index>(i));
    for (int j = 0; j < k; ++j) {
      Action a = env.sample_uniform_action(stream);
      State child = env.step(parent, a);
      Eigen::Index row = static_cast<Eigen::Index>(i) * k + j;
      for (Eigen::Index c = 0; c < d; ++c) out.states(row, c) = child[c];
    }
  });
  return out;
}

StateSet chronogem_explore(const Environment& env, const DiffusionConfig& config) {
  if (config.n < 2) throw std::invalid_argument("population n must be >= 2");
  if (config.k < 1) throw std::invalid_argument("branching factor k must be >= 1");
  if (config.t < 0) throw std::invalid_argument("horizon t must be >= 0");
  StateFilter filter = make_state_filter(config.filter_name);

  DiffusionConfig cfg = config;
  if (cfg.density == DensityFamily::kHistogram && !cfg.density_options.box) {
    // Anchor the histogram grid to the environment box so the estimator is
    // stable across iterations.
    cfg.density_options.box = BoundingBox{env.state_lo(), env.state_hi()};
  }

  const Eigen::Index n = cfg.n;
  StateSet population;
  population.states.resize(n, env.state_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    auto stream = rng::stream(cfg.seed, "chronogem.reset", static_cast<uint64_t>(i));
    State s = env.reset(stream);
    for (int c = 0; c < env.state_dim(); ++c) population.states(i, c) = s[c];
  }
  population.env_id = env.id();
  population.method = "chronogem";
  population.seed = cfg.seed;
  population.horizon = 0;

  uint64_t steps = 0;
  for (int t = 1; t <= cfg.t; ++t) {
    uint64_t branch_seed = rng::derive(cfg.seed, "chronogem.branch", t);
    StateSet candidates = branch(env, population, cfg.k, branch_seed, cfg.workers);
    steps += static_cast<uint64_t>(n) * static_cast<uint64_t>(cfg.k);

    auto fit_rng = rng::stream(cfg.seed, "chronogem.fit", t);
    std::unique_ptr<DensityModel> model;
    try {
      model = fit_density(cfg.density, candidates.states, cfg.density_options,
                          fit_rng);
    } catch (const std::exception& e) {
      throw std::runtime_error("density fit failed at iteration " + std::to_string(t) +
                               ": " + e.what());
    }

    candidates.log_densities.resize(static_cast<std::size_t>(candidates.states.rows()));
    for (Eigen::Index i = 0; i < candidates.states.rows(); ++i)
      candidates.log_densities[static_cast<std::size_t>(i)] =
          model->log_density(candidates.states.row(i).transpose());

    if (filter) {
      candidates.weights.resize(static_cast<std::size_t>(candidates.states.rows()));
      bool any = false;
      for (Eigen::Index i = 0; i < candidates.states.rows(); ++i) {
        bool keep = filter(candidates.row(i));
        candidates.weights[static_cast<std::size_t>(i)] = keep ? 1.0 : 0.0;
        any |= keep;
      }
      if (!any)
        throw std::runtime_error("filtered to empty at iteration " + std::to_string(t));
    }

    auto resample_rng = rng::stream(cfg.seed, "chronogem.resample", t);
    population = inverse_density_resample(candidates, n, resample_rng,
                                          cfg.without_replacement);
    population.horizon = t;
  }

  population.env_id = env.id();
  population.method = "chronogem";
  population.seed = cfg.seed;
  population.env_steps = steps;
  population.config = cfg.to_json();
  return population;
}

}  // namespace cgem
