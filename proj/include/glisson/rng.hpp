#pragma once

#include <cmath>
#include <cstdint>

namespace glisson {

// Deterministic, seedable random source shared by every stochastic stage.
// The standard <random> distributions are implementation-defined, so the
// few variates needed here (uniform, normal, gamma) are generated explicitly
// to keep artifacts byte-identical for a given seed.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hash-combines two 64-bit values into a new derived seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64_next(s);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0xd1b54a32d192ed03ULL) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform double in [0, 1).
    double unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        return lo + int(next_u64() % std::uint64_t(hi - lo + 1));
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = 1.0 - unit(); // (0, 1], keeps the log finite
        double u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Gamma(shape, scale = 1) via Marsaglia-Tsang squeeze.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = 1.0 - unit();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = 1.0 - unit();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

private:
    std::uint64_t state_;
};

} // namespace glisson
