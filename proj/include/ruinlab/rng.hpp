#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace ruinlab {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of sub-stream `stream` of path `index`; a pure function of its inputs.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(master) ^ index) + stream);
}

/// Uniform on the open interval (0, 1), from the top 53 bits.
inline double open_uniform(Engine& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

/// Inverse-CDF exponential draw with the given rate.
inline double exponential(Engine& rng, double rate) { return -std::log(open_uniform(rng)) / rate; }

/// Randomness of one Monte Carlo path. `events` drives claim times, claim
/// sizes and regime jumps; `diffusion` drives the Gaussian increments of the
/// log-price. Both derive only from (master seed, path index).
struct PathStreams {
  Engine events;
  Engine diffusion;
  boost::random::normal_distribution<double> normal;

  PathStreams(std::uint64_t master, std::uint64_t index)
      : events(stream_seed(master, index, 0)), diffusion(stream_seed(master, index, 1)) {}

  double gaussian() { return normal(diffusion); }
};

}  // namespace ruinlab
