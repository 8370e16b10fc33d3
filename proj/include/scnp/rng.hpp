#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace scnp {

// Deterministic random source used everywhere the library needs randomness
// (splits, weight init, dropout masks).
//
// All draws reduce to the raw 64-bit output of std::mt19937_64, whose
// sequence for a given seed is fixed by the C++ standard. The value
// transforms are implemented here instead of with std::*_distribution
// (which is implementation-defined), so seeded results are reproducible
// across compilers and platforms:
//
//   uniform01()    (raw() >> 11) * 2^-53, uniform in [0, 1)
//   below(n)       unbiased integer in [0, n) via 128-bit multiply with
//                  rejection (Lemire's method)
//   shuffle(v)     Fisher-Yates from the back, one below(i) per position
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    double uniform01() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    std::uint64_t below(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(raw()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(raw()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace scnp
