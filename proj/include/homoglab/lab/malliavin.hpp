#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "homoglab/core/errors.hpp"
#include "homoglab/core/grid.hpp"
#include "homoglab/core/smallmat.hpp"
#include "homoglab/lab/ensemble.hpp"
#include "homoglab/random/coefficient.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"

namespace homoglab {

// Chain-rule check for the coefficient's noise derivative: bump one noise
// cell by delta, rebuild the field through the exact convolution increment,
// and compare (a_pert - a)/delta against a0'(G(x)) c0(x - z) h^d on the
// kernel support. Relative to the sup of the prediction there; plain sup gap
// when the prediction vanishes identically.
inline double malliavin_fd_check(const WhiteNoiseSample& noise, const KernelC0& kernel,
                                 const CoefficientMapSpec& map, std::size_t z, int channel, double delta) {
    const TorusGrid& g = *noise.grid;
    if (z >= g.cells()) throw std::invalid_argument("malliavin_fd_check: site outside grid");
    if (channel < 0 || channel >= kernel.kappa)
        throw std::invalid_argument("malliavin_fd_check: channel outside kernel");
    if (!(delta >= 1e-6 && delta <= 1e-2))
        throw std::invalid_argument("malliavin_fd_check: step must lie in [1e-6, 1e-2]");

    const GaussianFieldSample field = build_gaussian_field(noise, kernel);
    GaussianFieldSample pert = field;
    add_noise_impulse(pert, kernel, z, channel, delta);

    const CoefficientField a = sample_coefficient_field(field, map);
    const CoefficientField ap = sample_coefficient_field(pert, map);

    const int d = g.dim();
    const double vol = kernel.cell_volume();
    const auto zc = g.coords(z);
    std::vector<double> gv(static_cast<std::size_t>(kernel.kappa), 0.0);

    double gap = 0.0, scale = 0.0;
    for (std::size_t t = 0; t < kernel.offsets.size(); ++t) {
        const auto& o = kernel.offsets[t];
        const std::size_t x = g.index({zc[0] + o[0], zc[1] + o[1], zc[2] + o[2]});
        for (int c = 0; c < kernel.kappa; ++c) gv[static_cast<std::size_t>(c)] = field.at(c, x);
        Mat pred = Mat::zero(d);
        for (int c = 0; c < kernel.kappa; ++c) {
            const double k = kernel.entry(t, c, channel) * vol;
            if (k == 0.0) continue;
            const Mat da = map.derivative(gv.data(), c);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) pred(i, j) += k * da(i, j);
        }
        const double* blk = a.block(x);
        const double* blkp = ap.block(x);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double fd = (blkp[i * d + j] - blk[i * d + j]) / delta;
                gap = std::max(gap, std::abs(fd - pred(i, j)));
                scale = std::max(scale, std::abs(pred(i, j)));
            }
    }
    return scale > 0.0 ? gap / scale : gap;
}

struct PoincareOptions {
    int stride = 4;        // site subsample: every stride-th cell per axis
    double delta = 1e-4;   // central difference step on the noise
    int min_sites = 8;     // below this the estimate is flagged unstable
};

struct PoincareReport {
    double variance = 0.0;
    double variance_stderr = 0.0;
    double gradient_bound = 0.0;  // E ||DX||^2 estimate, volume-reweighted
    double gradient_stderr = 0.0;
    double ratio = 0.0;           // variance / gradient_bound, the tested inequality
    int sites_per_seed = 0;
    int seeds_used = 0;
    bool degenerate = false;      // 0/0 from a constant observable
    bool subsample_warning = false;
};

// Spectral-gap inequality Var[X] <= E ||DX||^2 checked by finite differences:
// DX against each retained noise cell and channel via central differences,
// summed with the white-noise cell variance h^-d and the stratified volume
// reweighting cells/|S|. Pass the analytic variance for linear functionals,
// where the inequality saturates; otherwise the seed ensemble estimates it.
inline PoincareReport poincare_check(const TorusGrid& grid, const KernelC0& kernel, int kappa,
                                     const std::function<double(const GaussianFieldSample&)>& observable,
                                     const std::vector<std::uint64_t>& seeds,
                                     const PoincareOptions& opt = PoincareOptions{},
                                     const double* analytic_variance = nullptr, int threads = 1) {
    if (opt.stride < 1 || grid.n() % opt.stride != 0)
        throw std::invalid_argument("poincare_check: stride must divide the grid");
    if (!(opt.delta > 0.0)) throw std::invalid_argument("poincare_check: step must be positive");
    if (seeds.empty()) throw std::invalid_argument("poincare_check: empty seed list");
    if (analytic_variance == nullptr && seeds.size() < 2)
        throw std::invalid_argument("poincare_check: need >= 2 seeds or an analytic variance");

    const int d = grid.dim();
    std::vector<std::size_t> sites;
    {
        const int per_axis = grid.n() / opt.stride;
        std::size_t count = 1;
        for (int j = 0; j < d; ++j) count *= static_cast<std::size_t>(per_axis);
        for (std::size_t r = 0; r < count; ++r) {
            std::array<int, 3> c{0, 0, 0};
            std::size_t rem = r;
            for (int j = d - 1; j >= 0; --j) {
                c[static_cast<std::size_t>(j)] = static_cast<int>(rem % static_cast<std::size_t>(per_axis)) * opt.stride;
                rem /= static_cast<std::size_t>(per_axis);
            }
            sites.push_back(grid.index(c));
        }
    }

    double cell_volume = 1.0;
    for (int j = 0; j < d; ++j) cell_volume *= grid.h();
    const double noise_var = 1.0 / cell_volume; // Var xi per cell and channel
    const double reweight = static_cast<double>(grid.cells()) / static_cast<double>(sites.size());

    const std::size_t count = seeds.size();
    std::vector<double> xval(count, 0.0), bound(count, 0.0);
    std::vector<std::string> errors(count);
    detail::run_indexed(threads, count, [&](std::size_t i) {
        try {
            const WhiteNoiseSample noise = sample_white_noise(grid, kappa, seeds[i]);
            const GaussianFieldSample field = build_gaussian_field(noise, kernel);
            xval[i] = observable(field);
            long double acc = 0.0L;
            for (std::size_t z : sites)
                for (int c = 0; c < kappa; ++c) {
                    GaussianFieldSample up = field;
                    add_noise_impulse(up, kernel, z, c, +opt.delta);
                    GaussianFieldSample down = field;
                    add_noise_impulse(down, kernel, z, c, -opt.delta);
                    const double dx = (observable(up) - observable(down)) / (2.0 * opt.delta);
                    acc += static_cast<long double>(dx) * dx;
                }
            bound[i] = static_cast<double>(acc) * noise_var * reweight;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < count; ++i)
        if (!errors[i].empty())
            throw solver_error("poincare_check: seed " + std::to_string(seeds[i]) + " failed: " + errors[i]);

    PoincareReport out;
    out.sites_per_seed = static_cast<int>(sites.size());
    out.seeds_used = static_cast<int>(count);
    out.subsample_warning = static_cast<int>(sites.size()) < opt.min_sites;

    if (analytic_variance != nullptr) {
        out.variance = *analytic_variance;
    } else {
        long double m = 0.0L;
        for (double v : xval) m += v;
        m /= count;
        long double ss = 0.0L;
        for (double v : xval) ss += (v - m) * (v - m);
        out.variance = static_cast<double>(ss / (count - 1));
        out.variance_stderr = std::sqrt(2.0 / (count - 1)) * out.variance; // Gaussian-sample approximation
    }
    {
        long double m = 0.0L;
        for (double v : bound) m += v;
        m /= count;
        out.gradient_bound = static_cast<double>(m);
        if (count > 1) {
            long double ss = 0.0L;
            for (double v : bound) ss += (v - m) * (v - m);
            out.gradient_stderr = std::sqrt(static_cast<double>(ss / (count - 1) / count));
        }
    }

    if (out.gradient_bound == 0.0 && out.variance == 0.0) {
        out.degenerate = true;
        out.ratio = 0.0;
    } else {
        out.ratio = out.variance / out.gradient_bound;
    }
    return out;
}

} // namespace homoglab
