#pragma once

#include <cstdint>

namespace camfmc::rng {

// SplitMix64 finalizer (Steele/Lea/Flood; fixed-increment variant by Vigna).
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based generator: one word per (seed, sample, coordinate) key.
// Stateless, so any element of the stream can be produced independently and
// in parallel, and extending a batch preserves its prefix by construction.
// This triple-splitmix chain is the project's fixed generator choice.
constexpr std::uint64_t counter_word(std::uint64_t seed, std::uint64_t sample,
                                     std::uint64_t coord) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ sample) ^ coord);
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit_double(std::uint64_t word) noexcept {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

constexpr double uniform01(std::uint64_t seed, std::uint64_t sample,
                           std::uint64_t coord) noexcept {
  return to_unit_double(counter_word(seed, sample, coord));
}

// Independent substream seed (per replicate, per pipeline stage, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream));
}

// Fixed substream tags used by the engine and CLI.
inline constexpr std::uint64_t kStreamSamples = 0x5A4D504Cull;   // estimator samples
inline constexpr std::uint64_t kStreamPilot = 0x50494C4Full;     // pilot evaluations
inline constexpr std::uint64_t kStreamTraining = 0x54524E47ull;  // model training
inline constexpr std::uint64_t kStreamReplicate = 0x5245504Cull; // replicate studies
inline constexpr std::uint64_t kStreamReference = 0x52454652ull; // reference runs

}  // namespace camfmc::rng
