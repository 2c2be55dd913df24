#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "reqc/errors.hpp"

namespace reqc {

/// SplitMix64 mixing step; used for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Stable per-task seed: hash(master_seed, stream name, task index).
/// This is the documented seed-derivation scheme for all Monte Carlo
/// drivers, so any published number can be reproduced from the config.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t index) {
    return splitmix64(splitmix64(master ^ fnv1a64(stream)) ^ index);
}

/// mt19937_64 engine plus the handful of distributions the simulator
/// needs, implemented here rather than with std:: distributions so that
/// draws are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw parameter_error("uniform_index: n must be positive");
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    double exponential() {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return -std::log(u);
    }

    /// Standard normal via Box-Muller (two uniforms per draw, no caching,
    /// so the draw sequence is position-independent).
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Poisson draw by Knuth's multiplication method, chunked so that
    /// large means do not underflow exp(-mean).
    long poisson(double mean) {
        if (mean < 0.0 || !std::isfinite(mean))
            throw parameter_error("poisson: mean must be finite and non-negative");
        long total = 0;
        double remaining = mean;
        while (remaining > 0.0) {
            const double chunk = remaining > 500.0 ? 500.0 : remaining;
            remaining -= chunk;
            const double threshold = std::exp(-chunk);
            double p = 1.0;
            long k = 0;
            do {
                ++k;
                p *= uniform();
            } while (p > threshold);
            total += k - 1;
        }
        return total;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace reqc
