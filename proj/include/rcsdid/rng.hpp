#pragma once

#include <cstdint>
#include <random>

namespace rcsdid {

enum class StreamPurpose : std::uint64_t {
  GroupEffects = 1,  // alpha_k / S_k copula draw
  Loadings = 2,
  TimeEffects = 3,   // beta_t and f_t
  CountIncrements = 4,
  Noise = 5,
};

// Identifies one independent random stream. Replication 0 is reserved for
// the per-scenario fixed parameters.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  std::uint64_t group = 0;
  std::uint64_t period = 0;
  StreamPurpose purpose = StreamPurpose::Noise;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(const StreamKey& key) noexcept {
  std::uint64_t h = splitmix64(key.seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(key.purpose));
  h = splitmix64(h ^ key.replication);
  h = splitmix64(h ^ key.group);
  h = splitmix64(h ^ key.period);
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(const StreamKey& key) { return Engine(stream_seed(key)); }

}  // namespace rcsdid
