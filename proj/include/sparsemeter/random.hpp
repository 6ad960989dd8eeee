#pragma once

#include "sparsemeter/core.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace sparsemeter {

using Rng = std::mt19937_64;

/// Mixes a master seed with a string key (cell id, stream name) into a child seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view key);

/// Uniform random direction on the unit sphere in R^d.
Vector random_unit_vector(Index d, Rng& rng);

/// `count` distinct integers from [0, population), in sampling order.
std::vector<Index> sample_without_replacement(Index population, Index count, Rng& rng);

}  // namespace sparsemeter
