#pragma once

#include "cgem/env.hpp"
#include "cgem/state_set.hpp"

namespace cgem {

// Final states of `episodes` independent episodes of T uniform actions.
StateSet random_walk_explore(const Environment& env, int episodes, int horizon,
                             uint64_t seed, int workers = 1);

// Greedy one-step novelty explorer: at each step sample `candidates` uniform
// actions and take the one landing in the least-visited cell of a visitation
// grid over the env's 2D projection. Simplified stand-in, not a published
// baseline. Episodes see the global grid as of their start plus their own
// local visits; local grids merge into the global one at episode end.
StateSet count_bonus_explore(const Environment& env, int episodes, int horizon,
                             int grid_bins, int candidates, uint64_t seed);

}  // namespace cgem
