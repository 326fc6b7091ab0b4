#pragma once

#include "hgfm/assembly.hpp"

#include <random>

namespace hgfm {

struct RandomSystemOptions {
    std::size_t min_nodes = 2;
    std::size_t max_nodes = 4;
    double extra_edge_probability = 0.3;
    // Equal k_omega per dc subnet, k_p inside the standard Cond.-2 bound, every converter on a dc edge.
    bool tuned = false;
    bool allow_wind = true;
    bool allow_pv = true;
};

// Random connected hybrid system with random device data and gains.
[[nodiscard]] HybridSystem random_system(std::mt19937_64& rng, const RandomSystemOptions& options = {});

// Random tuned system that passes conditions 1-5 in strict mode (rejection sampling).
[[nodiscard]] HybridSystem random_certified_system(std::mt19937_64& rng,
                                                   const RandomSystemOptions& options = {});

}  // namespace hgfm
