#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace cgae {

// Seeded stream of uniforms in [0, 1) and standard normals.
//
// Uniforms take the top 53 bits of a 64-bit Mersenne Twister draw. Normals use
// the Box-Muller transform on two consecutive uniforms; both outputs are
// consumed in order (cosine branch first), so a given seed fixes the entire
// sequence of draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for worker or instance `index`, seeded by
  // splitmix64(seed, index).
  static Rng substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64();
  double uniform();
  double normal();
  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace cgae
