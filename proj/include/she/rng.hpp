// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace she {

/// Seeded random stream. Every randomized generator in the library takes one
/// of these explicitly so runs are reproducible bit-for-bit under a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double gaussian() { return normal_(engine_); }

    /// Standard circularly-symmetric complex Gaussian, unit variance
    /// (variance 1/2 per real component).
    std::complex<double> cgaussian() {
        const double re = gaussian();
        const double im = gaussian();
        return {re * k_inv_sqrt2, im * k_inv_sqrt2};
    }

    std::mt19937_64& engine() { return engine_; }

private:
    static constexpr double k_inv_sqrt2 = 0.70710678118654752440;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64 step; used to derive independent per-trial seeds from a base
/// seed and a trial counter.
inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t counter) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace she
