#pragma once

#include <cstdint>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace fsynth {

/// Identifies the random-stream algorithm. Bump whenever the derivation or
/// the sampling method changes, since recorded traces depend on it.
inline constexpr std::string_view kRandomStreamVersion = "mt19937_64+splitmix64(seed^fnv1a64(label))/boost-ziggurat/1";

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

/*!
 * Deterministic sample source for one noise process.
 *
 * The engine seed is mixed with a per-source label so that each noise source
 * draws from its own independent sequence. The generator and distributions
 * come from Boost.Random, whose algorithms are fully specified in headers,
 * so sequences are reproducible across platforms for a pinned Boost version.
 */
class RandomStream
{
  public:
    RandomStream(std::uint64_t seed, std::string_view label);

    double gaussian() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

  private:
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::uniform_01<double> uniform_;
};

}  // namespace fsynth
