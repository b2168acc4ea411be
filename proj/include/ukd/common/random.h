#ifndef UKD_COMMON_RANDOM_H_
#define UKD_COMMON_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace ukd {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t MixBits(std::uint64_t x);

// Child seed for an independent stream: hash(parent, component, index).
std::uint64_t DeriveSeed(std::uint64_t parent, std::string_view component,
                         std::uint64_t index = 0);

// Child seed from numeric coordinates only (per step / head / record streams).
std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t a,
                         std::uint64_t b = 0, std::uint64_t c = 0);

// Uniform double in [0, 1) with 53 random bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ukd

#endif  // UKD_COMMON_RANDOM_H_
