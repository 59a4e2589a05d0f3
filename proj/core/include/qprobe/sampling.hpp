#pragma once

// Binomial shot noise on exact population series.

#include <cstdint>

#include "qprobe/evolution.hpp"

namespace qprobe {

struct ShotSpec {
  int shots_per_point = 10000;
  std::uint64_t seed = 0x5eed;
};

// Counter-based stream: the draw for grid point i of stream s depends only on
// (seed, s, i), so points can be generated in any order or in parallel.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Each value becomes k/M with k ~ Binomial(M, p). Refuses difference series
// and already-sampled data (BadProvenance). `stream` separates independent
// preparations sharing one seed.
PopulationSeries sample_series(const PopulationSeries& series, const ShotSpec& spec, std::uint64_t stream = 0);

// Samples the two preparations independently, then subtracts.
PopulationSeries sample_difference(const PopulationSeries& plus, const PopulationSeries& minus, const ShotSpec& spec,
                                   std::uint64_t stream = 0);

}  // namespace qprobe
