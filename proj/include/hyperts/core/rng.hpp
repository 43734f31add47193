#pragma once

#include <cmath>
#include <cstdint>

namespace hyperts {

/// Deterministic 64-bit RNG (splitmix64). Distribution helpers are
/// implemented by hand so streams are identical across platforms and
/// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    bool bernoulli(double p) { return next_double() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        return n == 0 ? 0 : next_u64() % n;
    }

    /// Derive an independent stream, e.g. one per (epoch, batch).
    Rng fork(std::uint64_t stream) {
        Rng child(state_ ^ (0xd1342543de82ef95ull * (stream + 1)));
        child.next_u64();
        return child;
    }

private:
    std::uint64_t state_;
};

} // namespace hyperts
