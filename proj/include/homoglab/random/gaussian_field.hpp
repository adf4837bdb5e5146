#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "homoglab/calculus/fft.hpp"
#include "homoglab/core/grid.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"

namespace homoglab {

enum class ConvolutionPath { automatic, direct, fft };

// Stationary Gaussian field G = c0 * xi (discrete convolution, weight h^d).
struct GaussianFieldSample {
    GaussianFieldSample(const TorusGrid& g, int kappa_)
        : grid(&g), kappa(kappa_), values(static_cast<std::size_t>(kappa_) * g.cells(), 0.0) {}

    const TorusGrid* grid;
    int kappa;
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::string kernel_hash;
    std::string path_used;

    double& at(int channel, std::size_t s) { return values[static_cast<std::size_t>(channel) * grid->cells() + s]; }
    double at(int channel, std::size_t s) const { return values[static_cast<std::size_t>(channel) * grid->cells() + s]; }
};

inline void check_kernel_grid(const KernelC0& kernel, const TorusGrid& grid) {
    if (kernel.d != grid.dim())
        throw std::invalid_argument("gaussian field: kernel dimension does not match grid");
    if (std::abs(kernel.h - grid.h()) > 1e-12 * std::max(1.0, grid.h()))
        throw std::invalid_argument("gaussian field: kernel was discretized at a different spacing than the grid");
    if (2 * kernel.radius_cells >= grid.n())
        throw std::invalid_argument("gaussian field: kernel support 2*R0 must be smaller than the grid (periodic wrap)");
}

inline GaussianFieldSample convolve_direct(const WhiteNoiseSample& noise, const KernelC0& kernel) {
    const TorusGrid& g = *noise.grid;
    GaussianFieldSample out(g, kernel.kappa);
    const double vol = kernel.cell_volume();
    for (int c = 0; c < kernel.kappa; ++c) {
        for (std::size_t s = 0; s < g.cells(); ++s) {
            const auto xc = g.coords(s);
            double acc = 0.0;
            for (std::size_t t = 0; t < kernel.offsets.size(); ++t) {
                const auto& o = kernel.offsets[t];
                const std::size_t src = g.index({xc[0] - o[0], xc[1] - o[1], xc[2] - o[2]});
                for (int e = 0; e < kernel.kappa; ++e) acc += kernel.entry(t, c, e) * noise.at(e, src);
            }
            out.at(c, s) = acc * vol;
        }
    }
    return out;
}

inline GaussianFieldSample convolve_fft(const WhiteNoiseSample& noise, const KernelC0& kernel) {
    const TorusGrid& g = *noise.grid;
    GaussianFieldSample out(g, kernel.kappa);
    const double vol = kernel.cell_volume();
    SpectralWorkspace ws(g);
    const std::size_t m = ws.complex_size();
    // kernel image spectra, one per (c, e) pair
    std::vector<std::vector<std::complex<double>>> kspec(
        static_cast<std::size_t>(kernel.kappa) * static_cast<std::size_t>(kernel.kappa));
    for (int c = 0; c < kernel.kappa; ++c)
        for (int e = 0; e < kernel.kappa; ++e) {
            double* r = ws.real_buffer();
            std::fill(r, r + g.cells(), 0.0);
            for (std::size_t t = 0; t < kernel.offsets.size(); ++t) {
                const auto& o = kernel.offsets[t];
                r[g.index({o[0], o[1], o[2]})] += kernel.entry(t, c, e);
            }
            ws.forward();
            auto& dst = kspec[static_cast<std::size_t>(c) * static_cast<std::size_t>(kernel.kappa) + static_cast<std::size_t>(e)];
            dst.assign(ws.spectral_buffer(), ws.spectral_buffer() + m);
        }
    std::vector<std::vector<std::complex<double>>> nspec(static_cast<std::size_t>(kernel.kappa));
    for (int e = 0; e < kernel.kappa; ++e) {
        double* r = ws.real_buffer();
        for (std::size_t s = 0; s < g.cells(); ++s) r[s] = noise.at(e, s);
        ws.forward();
        nspec[static_cast<std::size_t>(e)].assign(ws.spectral_buffer(), ws.spectral_buffer() + m);
    }
    for (int c = 0; c < kernel.kappa; ++c) {
        auto* spec = ws.spectral_buffer();
        for (std::size_t i = 0; i < m; ++i) spec[i] = 0.0;
        for (int e = 0; e < kernel.kappa; ++e) {
            const auto& ks = kspec[static_cast<std::size_t>(c) * static_cast<std::size_t>(kernel.kappa) + static_cast<std::size_t>(e)];
            const auto& ns = nspec[static_cast<std::size_t>(e)];
            for (std::size_t i = 0; i < m; ++i) spec[i] += ks[i] * ns[i];
        }
        for (std::size_t i = 0; i < m; ++i) spec[i] *= vol;
        ws.backward();
        const double* r = ws.real_buffer();
        for (std::size_t s = 0; s < g.cells(); ++s) out.at(c, s) = r[s];
    }
    return out;
}

inline GaussianFieldSample build_gaussian_field(const WhiteNoiseSample& noise, const KernelC0& kernel,
                                                ConvolutionPath path = ConvolutionPath::automatic) {
    check_kernel_grid(kernel, *noise.grid);
    if (noise.kappa != kernel.kappa)
        throw std::invalid_argument("gaussian field: noise and kernel channel counts differ");
    const bool use_fft = (path == ConvolutionPath::fft) ||
                         (path == ConvolutionPath::automatic && noise.grid->n() >= 32);
    GaussianFieldSample out = use_fft ? convolve_fft(noise, kernel) : convolve_direct(noise, kernel);
    out.seed = noise.seed;
    out.kernel_hash = kernel.content_hash();
    out.path_used = use_fft ? "fft" : "direct";
    return out;
}

// Adds the exact field increment of a single-site noise perturbation
// xi_channel(z) += delta, using linearity of the convolution: G_c gains
// delta * c0_{c,channel}(x - z) * h^d on the kernel support and nothing
// elsewhere. Exact for both convolution paths, so derivative checks see a
// bitwise-zero change outside the support.
inline void add_noise_impulse(GaussianFieldSample& field, const KernelC0& kernel,
                              std::size_t z, int channel, double delta) {
    const TorusGrid& g = *field.grid;
    const auto zc = g.coords(z);
    const double w = delta * kernel.cell_volume();
    for (std::size_t t = 0; t < kernel.offsets.size(); ++t) {
        const auto& o = kernel.offsets[t];
        const std::size_t x = g.index({zc[0] + o[0], zc[1] + o[1], zc[2] + o[2]});
        for (int c = 0; c < kernel.kappa; ++c) field.at(c, x) += w * kernel.entry(t, c, channel);
    }
}

} // namespace homoglab
