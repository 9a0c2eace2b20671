#pragma once

#include <cstdint>
#include <boost/random/normal_distribution.hpp>
#include <random>
#include <span>

namespace adalang {

/// Deterministic stream of standard normal draws for one trajectory.
///
/// The engine is std::mt19937_64 seeded with splitmix64(splitmix64(seed ^ tag)
/// + trajectory index), so a given (seed, index) pair yields the same
/// sequence on every run and independently of which thread runs it.
///
/// Normals come from boost::random::normal_distribution (ziggurat). The
/// sequence is fixed for a given Boost version.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t index);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  void fill_normal(std::span<double> out);

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Stream for trajectory `trajectory_index` of an ensemble seeded with `seed`.
/// Throws std::invalid_argument for a negative index.
[[nodiscard]] RngStream derive_stream(std::uint64_t seed, std::int64_t trajectory_index);

}  // namespace adalang
