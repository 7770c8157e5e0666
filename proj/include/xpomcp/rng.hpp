#pragma once

#include <cstdint>
#include <random>

namespace xpomcp {

// Seeded random stream. Every stochastic component owns one of these; there
// is no global RNG. Derived streams (per run, per trace) are obtained with
// derive() so that parallel or reordered execution cannot change results.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    double uniform() { return unit_(engine_); }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(std::uniform_int_distribution<std::uint64_t>(
            0, static_cast<std::uint64_t>(n) - 1)(engine_));
    }

    bool bernoulli(double p) { return uniform() < p; }

    double exponential() { return exp_(engine_); }

    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

    // Stable stream derivation: mixes the parts through splitmix64.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        return mix(mix(seed) ^ (stream * 0x9e3779b97f4a7c15ULL));
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::exponential_distribution<double> exp_{1.0};
};

}  // namespace xpomcp
