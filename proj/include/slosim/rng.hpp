#pragma once

#include <cstdint>

namespace slosim {

// xoshiro256** seeded through splitmix64. Self-contained so that sampled
// sequences are identical across compilers and standard libraries. Streams
// are keyed, so adding a stream never perturbs the draws of existing ones.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  // Uniform in (0, 1): never returns 0, so inverse-CDF sampling stays finite.
  double next_u01();

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace slosim
