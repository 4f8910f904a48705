#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace larf {

// 64-bit mixing used to derive independent streams from (seed, index) pairs.
// Distribution helpers avoid std:: distributions, whose output is not pinned
// by the standard; re-runs must reproduce artifacts byte for byte.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1) with 53 bits of precision
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    // standard normal via Box-Muller (one value per call, two uniforms consumed)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
};

} // namespace larf
