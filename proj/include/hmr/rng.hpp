#pragma once

#include <cmath>
#include <cstdint>

namespace hmr {

// Deterministic splitmix64 generator. Used everywhere instead of <random>
// distributions so that identical seeds give bit-identical streams on any
// platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // standard normal via Box-Muller (no cached spare, keeps the stream
    // position a pure function of call count)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(next_u64() % n);
    }

private:
    std::uint64_t state_;
};

} // namespace hmr
