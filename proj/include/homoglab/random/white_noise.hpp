#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "homoglab/core/grid.hpp"
#include "homoglab/random/gaussian_rng.hpp"

namespace homoglab {

// Discrete white noise: per cell and channel, independent N(0, h^-d). The
// variance makes cell integrals xi * h^d match unit-rate continuum white
// noise, so kernel smoothing below reproduces the continuum covariance.
// Values are filled site-major within each channel, channels outermost, so a
// (seed, grid, kappa) triple pins every bit of the sample.
struct WhiteNoiseSample {
    WhiteNoiseSample(const TorusGrid& g, int kappa_, std::uint64_t seed_)
        : grid(&g), kappa(kappa_), seed(seed_),
          values(static_cast<std::size_t>(kappa_) * g.cells(), 0.0) {}

    const TorusGrid* grid;
    int kappa;
    std::uint64_t seed;
    std::vector<double> values;

    double& at(int channel, std::size_t s) { return values[static_cast<std::size_t>(channel) * grid->cells() + s]; }
    double at(int channel, std::size_t s) const { return values[static_cast<std::size_t>(channel) * grid->cells() + s]; }
};

inline WhiteNoiseSample sample_white_noise(const TorusGrid& grid, int kappa, std::uint64_t seed) {
    if (kappa < 1) throw std::invalid_argument("sample_white_noise: kappa must be >= 1");
    WhiteNoiseSample out(grid, kappa, seed);
    double vol = 1.0;
    for (int k = 0; k < grid.dim(); ++k) vol *= grid.h();
    const double sd = 1.0 / std::sqrt(vol);
    GaussianRng rng(derive_seed(seed, 0x57484954ull)); // substream tag for noise
    for (double& x : out.values) x = sd * rng.normal();
    return out;
}

// Coarse-grain to the next-coarser dyadic grid (2^d children per cell). Cell
// integrals are preserved: xi_H = 2^-d * sum of children, which has exactly
// the H^-d variance of white noise at the coarser spacing. Used for matched
// refinement studies where one underlying sample is viewed at several h.
inline WhiteNoiseSample coarsen_white_noise(const WhiteNoiseSample& fine, const TorusGrid& coarse) {
    const TorusGrid& fg = *fine.grid;
    if (coarse.dim() != fg.dim() || coarse.side() != fg.side() || 2 * coarse.n() != fg.n())
        throw std::invalid_argument("coarsen_white_noise: coarse grid must halve the fine grid at fixed side length");
    WhiteNoiseSample out(coarse, fine.kappa, fine.seed);
    const int d = fg.dim();
    const double w = 1.0 / static_cast<double>(1u << d);
    for (int c = 0; c < fine.kappa; ++c) {
        for (std::size_t s = 0; s < coarse.cells(); ++s) {
            const auto cc = coarse.coords(s);
            double acc = 0.0;
            const int sub = 1 << d;
            for (int m = 0; m < sub; ++m) {
                std::array<int, 3> fcoord{0, 0, 0};
                for (int k = 0; k < d; ++k) fcoord[k] = 2 * cc[k] + ((m >> k) & 1);
                acc += fine.at(c, fg.index(fcoord));
            }
            out.at(c, s) = w * acc;
        }
    }
    return out;
}

} // namespace homoglab
