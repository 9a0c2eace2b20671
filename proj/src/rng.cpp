#include "adalang/rng.hpp"

#include <stdexcept>

namespace adalang {

namespace {

constexpr std::uint64_t kDomainTag = 0x1a5e7a11u;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ kDomainTag) + index));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t index) : engine_(seeded_engine(seed, index)) {}

double RngStream::uniform() {
  // 53 random bits mapped to the centre of one of 2^53 equal cells of (0, 1).
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

void RngStream::fill_normal(std::span<double> out) {
  for (double& z : out) z = normal();
}

RngStream derive_stream(std::uint64_t seed, std::int64_t trajectory_index) {
  if (trajectory_index < 0) throw std::invalid_argument("derive_stream: trajectory index must be >= 0");
  return RngStream(seed, static_cast<std::uint64_t>(trajectory_index));
}

}  // namespace adalang
