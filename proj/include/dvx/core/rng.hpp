#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace dvx {

/// Seeded random source with platform-independent distributions.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the standard. The standard
/// distributions are implementation-defined, so uniform/normal/index draws are derived here
/// directly from the raw 64-bit output to keep every run bit-reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Independent child seed for a named purpose, e.g. derive_seed(seed, "scene", id).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

}  // namespace dvx
