#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace homoglab {

// Standard normal generator over mt19937_64 with an explicit Box-Muller
// transform. std::normal_distribution is implementation-defined, which would
// make "same seed, same sample" depend on the standard library; this spells
// out every step so streams are reproducible anywhere.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() {
        // 53-bit mantissa, shifted into (0,1]: never returns 0, so log() below is safe
        const std::uint64_t bits = eng_() >> 11;
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Splits a user seed into independent named substreams (noise, probes, ...)
// without overlapping the main stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer over the combined word
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace homoglab
