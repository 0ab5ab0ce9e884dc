#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace causalboot {

// Identifies the generator and the sampling transforms, recorded in report
// sidecars so a run can be reproduced bit-for-bit.
inline constexpr const char* k_generator_id = "mt19937_64/boxmuller-v1";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derive an independent stream id from a base seed and a tag. Chaining calls
// derives nested streams: derive_seed(derive_seed(seed, replicate), env).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

// Seedable, splittable wrapper around std::mt19937_64. The engine output
// sequence is pinned by the standard; uniform/normal transforms are
// implemented here so draws do not depend on the standard library's
// distribution internals.
class rng {
public:
    explicit rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), n >= 1; rejection sampling to avoid bias.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller; fixed draw count per call.
    double normal() {
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Independent child stream; independent of this stream's draw position.
    rng derive(std::uint64_t tag) const { return rng(derive_seed(seed_, tag)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace causalboot
