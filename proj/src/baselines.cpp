#include "cgem/baselines.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "cgem/parallel.hpp"
#include "cgem/rng.hpp"

namespace cgem {

StateSet random_walk_explore(const Environment& env, int episodes, int horizon,
                             uint64_t seed, int workers) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");

  StateSet out;
  out.states.resize(episodes, env.state_dim());
  parallel_for(static_cast<std::size_t>(episodes), workers, [&](std::size_t e) {
    auto stream = rng::stream(seed, "randomwalk.episode", e);
    State s = env.reset(stream);
    for (int t = 0; t < horizon; ++t)
      s = env.step(s, env.sample_uniform_action(stream));
    for (int c = 0; c < env.state_dim(); ++c)
      out.states(static_cast<Eigen::Index>(e), c) = s[c];
  });
  out.horizon = horizon;
  out.env_id = env.id();
  out.method = "randomwalk";
  out.seed = seed;
  out.env_steps = static_cast<uint64_t>(episodes) * static_cast<uint64_t>(horizon);
  out.config = {{"episodes", episodes}, {"t", horizon}, {"seed", seed}};
  return out;
}

namespace {

struct VisitGrid {
  std::array<int, 2> proj;
  double lo0, lo1, w0, w1;
  int bins;
  std::vector<uint64_t> counts;

  VisitGrid(const Environment& env, int bins_) : bins(bins_) {
    proj = env.grid_projection();
    auto lo = env.state_lo();
    auto hi = env.state_hi();
    lo0 = lo[proj[0]];
    lo1 = lo[proj[1]];
    w0 = (hi[proj[0]] - lo0) / bins;
    w1 = (hi[proj[1]] - lo1) / bins;
    counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  }

  std::size_t cell(const State& s) const {
    int i0 = std::clamp(static_cast<int>((s[proj[0]] - lo0) / w0), 0, bins - 1);
    int i1 = std::clamp(static_cast<int>((s[proj[1]] - lo1) / w1), 0, bins - 1);
    return static_cast<std::size_t>(i1) * bins + i0;
  }
};

}  // namespace

StateSet count_bonus_explore(const Environment& env, int episodes, int horizon,
                             int grid_bins, int candidates, uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (grid_bins < 2) throw std::invalid_argument("grid_bins must be >= 2");
  if (candidates < 1) throw std::invalid_argument("candidates must be >= 1");

  VisitGrid global(env, grid_bins);
  StateSet out;
  out.states.resize(episodes, env.state_dim());
  uint64_t steps = 0;

  for (int e = 0; e < episodes; ++e) {
    auto stream = rng::stream(seed, "countbonus.episode", static_cast<uint64_t>(e));
    VisitGrid local(env, grid_bins);
    State s = env.reset(stream);
    local.counts[local.cell(s)] += 1;
    for (int t = 0; t < horizon; ++t) {
      State best_state;
      uint64_t best_count = 0;
      int ties = 0;
      for (int c = 0; c < candidates; ++c) {
        Action a = env.sample_uniform_action(stream);
        State next = env.step(s, a);
        ++steps;
        std::size_t cell = local.cell(next);
        uint64_t count = global.counts[cell] + local.counts[cell];
        if (c == 0 || count < best_count) {
          best_count = count;
          best_state = next;
          ties = 1;
        } else if (count == best_count) {
          // Reservoir choice keeps ties uniform.
          ++ties;
          if (rng::uniform(stream) * ties < 1.0) best_state = next;
        }
      }
      s = std::move(best_state);
      local.counts[local.cell(s)] += 1;
    }
    for (std::size_t i = 0; i < global.counts.size(); ++i)
      global.counts[i] += local.counts[i];
    for (int c = 0; c < env.state_dim(); ++c) out.states(e, c) = s[c];
  }

  uint64_t distinct = 0;
  for (uint64_t c : global.counts) distinct += c > 0 ? 1 : 0;

  out.horizon = horizon;
  out.env_id = env.id();
  out.method = "countbonus";
  out.seed = seed;
  out.env_steps = steps;
  out.config = {{"episodes", episodes},
                {"t", horizon},
                {"grid_bins", grid_bins},
                {"candidates", candidates},
                {"seed", seed},
                {"distinct_cells_visited", distinct}};
  return out;
}

}  // namespace cgem
