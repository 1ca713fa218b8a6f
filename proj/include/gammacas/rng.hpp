#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gammacas {

/// All randomness flows through explicit transforms of mt19937_64 output so
/// that results are reproducible across standard library implementations
/// (std::uniform_real_distribution et al. are not pinned by the standard).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    std::uint64_t bits() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

/// Per-item streams derived from a base seed (cascade i uses seed ^ i).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

}  // namespace gammacas
