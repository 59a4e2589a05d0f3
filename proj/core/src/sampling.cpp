#include "qprobe/sampling.hpp"

#include <algorithm>
#include <random>

#include "qprobe/error.hpp"

namespace qprobe {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix(mix(mix(seed) ^ stream) ^ index);
}

PopulationSeries sample_series(const PopulationSeries& series, const ShotSpec& spec, std::uint64_t stream) {
  if (spec.shots_per_point < 1) throw Error(ErrorCode::BadParameter, "shots per point must be >= 1");
  if (series.provenance == Provenance::Sampled) {
    throw Error(ErrorCode::BadProvenance, "series is already sampled");
  }
  if (series.meta.difference) {
    throw Error(ErrorCode::BadProvenance, "sample the two preparations, not their difference");
  }
  validate(series);

  PopulationSeries out = series;
  out.provenance = Provenance::Sampled;
  out.meta.shots = spec.shots_per_point;
  out.meta.seed = spec.seed;
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    const double p = std::clamp(series.values[i], 0.0, 1.0);
    std::mt19937_64 rng(stream_key(spec.seed, stream, i));
    std::binomial_distribution<int> draw(spec.shots_per_point, p);
    out.values[i] = static_cast<double>(draw(rng)) / spec.shots_per_point;
  }
  return out;
}

PopulationSeries sample_difference(const PopulationSeries& plus, const PopulationSeries& minus, const ShotSpec& spec,
                                   std::uint64_t stream) {
  const PopulationSeries a = sample_series(plus, spec, 2 * stream);
  const PopulationSeries b = sample_series(minus, spec, 2 * stream + 1);
  return difference(a, b);
}

}  // namespace qprobe
