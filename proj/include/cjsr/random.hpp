#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace cjsr {

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Sub-seed for stream `index` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Portable pseudo-random source: std::mt19937_64 (whose output sequence is
/// fixed by the standard) with hand-rolled conversions, so results are
/// bit-identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Index drawn with probability proportional to weights (nonnegative,
    /// positive sum). Zero-weight entries are never returned.
    std::size_t categorical(std::span<const double> weights);

private:
    std::mt19937_64 engine_;
};

}  // namespace cjsr
