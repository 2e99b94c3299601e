#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace retarda {

/// Deterministic 64-bit PRNG (splitmix64). Used everywhere instead of
/// std:: distributions so that seeded experiments are bit-identical
/// across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal via Box-Muller (fresh pair per call; deterministic).
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform point in the closed Euclidean ball of the given radius.
    std::vector<double> uniform_in_ball(std::size_t dim, double radius) {
        std::vector<double> v(dim, 0.0);
        if (dim == 0 || radius <= 0.0) return v;
        if (dim == 1) {
            v[0] = uniform(-radius, radius);
            return v;
        }
        double norm2 = 0.0;
        for (auto& x : v) {
            x = normal();
            norm2 += x * x;
        }
        double norm = std::sqrt(norm2);
        if (norm == 0.0) return std::vector<double>(dim, 0.0);
        double scale = radius * std::pow(uniform01(), 1.0 / static_cast<double>(dim)) / norm;
        for (auto& x : v) x *= scale;
        return v;
    }

private:
    std::uint64_t state_;
};

/// Stable per-item seed derivation: workers sampling item i with
/// derive_seed(seed, i) get order-independent, reproducible streams,
/// and the first N items of an (N+k)-sample run match the N-sample run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    Rng mixer(seed ^ (0x517cc1b727220a95ULL * (index + 1)));
    return mixer.next_u64();
}

} // namespace retarda
