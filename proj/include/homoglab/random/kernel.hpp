#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "homoglab/io/sha256.hpp"

namespace homoglab {

// Convolution kernel c0 on the lattice: finitely many taps at integer cell
// offsets, each a kappa x kappa matrix. The kernel is tied to the spacing h it
// was discretized at; it must be even, and it is normalized so that the
// discrete sup-convolved L1 norm equals one (sum over sites, weight h^d, of
// the largest matrix entry within a physical unit ball around the site).
struct KernelC0 {
    int d = 0;
    int kappa = 1;
    double h = 1.0;
    int radius_cells = 0;
    std::string profile = "custom";
    std::vector<std::array<int, 3>> offsets;
    std::vector<std::vector<double>> values; // kappa*kappa row-major per tap

    double entry(std::size_t tap, int c, int cp) const {
        return values[tap][static_cast<std::size_t>(c) * static_cast<std::size_t>(kappa) + static_cast<std::size_t>(cp)];
    }

    double max_abs_entry(std::size_t tap) const {
        double m = 0.0;
        for (double v : values[tap]) m = std::max(m, std::abs(v));
        return m;
    }

    double cell_volume() const {
        double vol = 1.0;
        for (int k = 0; k < d; ++k) vol *= h;
        return vol;
    }

    std::string content_hash() const {
        Sha256 hsh;
        char buf[128];
        std::snprintf(buf, sizeof buf, "kernel|d=%d|kappa=%d|h=%.17g|", d, kappa, h);
        hsh.update(buf, std::strlen(buf));
        // offsets are kept sorted, so serialization order is canonical
        for (std::size_t t = 0; t < offsets.size(); ++t) {
            std::snprintf(buf, sizeof buf, "(%d,%d,%d):", offsets[t][0], offsets[t][1], offsets[t][2]);
            hsh.update(buf, std::strlen(buf));
            for (double v : values[t]) {
                std::snprintf(buf, sizeof buf, "%.17g,", v);
                hsh.update(buf, std::strlen(buf));
            }
        }
        return hsh.hex_digest();
    }
};

struct KernelReport {
    double norm_before = 0.0;   // sup-convolved L1 norm prior to rescaling
    double evenness_gap = 0.0;  // max |c0(-x) - c0(x)| over taps
    int radius_cells = 0;
    std::size_t tap_count = 0;
    std::string normalization_note =
        "unit-ball surrogate: max absolute matrix entry over lattice sites within physical distance 1";
};

namespace detail {

inline std::vector<std::array<int, 3>> box_offsets(int d, int radius) {
    std::vector<std::array<int, 3>> out;
    const int lo = -radius, hi = radius;
    std::array<int, 3> o{0, 0, 0};
    std::vector<int> span(static_cast<std::size_t>(d));
    for (int i0 = lo; i0 <= hi; ++i0) {
        if (d == 1) { out.push_back({i0, 0, 0}); continue; }
        for (int i1 = lo; i1 <= hi; ++i1) {
            if (d == 2) { out.push_back({i0, i1, 0}); continue; }
            for (int i2 = lo; i2 <= hi; ++i2) out.push_back({i0, i1, i2});
        }
    }
    (void)o; (void)span;
    return out;
}

} // namespace detail

// Discrete sup-convolved L1 norm (the normalization functional).
inline double kernel_sup_l1_norm(const KernelC0& k) {
    std::map<std::array<int, 3>, double> tap_mag;
    for (std::size_t t = 0; t < k.offsets.size(); ++t) tap_mag[k.offsets[t]] = k.max_abs_entry(t);
    const int ball = static_cast<int>(std::ceil(1.0 / k.h));
    std::vector<std::array<int, 3>> ball_offs;
    for (const auto& o : detail::box_offsets(k.d, ball)) {
        double r2 = 0.0;
        for (int j = 0; j < k.d; ++j) r2 += (o[j] * k.h) * (o[j] * k.h);
        if (r2 <= 1.0 + 1e-12) ball_offs.push_back(o);
    }
    const int reach = k.radius_cells + ball;
    double sum = 0.0;
    for (const auto& x : detail::box_offsets(k.d, reach)) {
        double sup = 0.0;
        for (const auto& b : ball_offs) {
            std::array<int, 3> y{x[0] + b[0], x[1] + b[1], x[2] + b[2]};
            auto it = tap_mag.find(y);
            if (it != tap_mag.end()) sup = std::max(sup, it->second);
        }
        sum += sup;
    }
    return sum * k.cell_volume();
}

// Checks evenness and duplicate taps, then rescales so the sup-convolved L1
// norm is exactly one. Re-validating a normalized kernel is a no-op.
inline KernelC0 validate_kernel(const KernelC0& kernel, KernelReport* report = nullptr) {
    if (kernel.d < 1 || kernel.d > 3) throw std::invalid_argument("validate_kernel: dimension out of range");
    if (kernel.kappa < 1) throw std::invalid_argument("validate_kernel: kappa must be >= 1");
    if (kernel.offsets.size() != kernel.values.size() || kernel.offsets.empty())
        throw std::invalid_argument("validate_kernel: empty or inconsistent tap table");
    std::map<std::array<int, 3>, std::size_t> where;
    for (std::size_t t = 0; t < kernel.offsets.size(); ++t) {
        if (!where.emplace(kernel.offsets[t], t).second)
            throw std::invalid_argument("validate_kernel: repeated tap offset");
        if (kernel.values[t].size() != static_cast<std::size_t>(kernel.kappa) * static_cast<std::size_t>(kernel.kappa))
            throw std::invalid_argument("validate_kernel: tap value has wrong shape");
    }
    double evenness = 0.0;
    for (std::size_t t = 0; t < kernel.offsets.size(); ++t) {
        const auto& o = kernel.offsets[t];
        std::array<int, 3> m{-o[0], -o[1], -o[2]};
        auto it = where.find(m);
        if (it == where.end()) throw std::invalid_argument("validate_kernel: kernel is not even (missing mirrored tap)");
        for (std::size_t e = 0; e < kernel.values[t].size(); ++e)
            evenness = std::max(evenness, std::abs(kernel.values[t][e] - kernel.values[it->second][e]));
    }
    if (evenness > 1e-14) throw std::invalid_argument("validate_kernel: kernel is not even");

    KernelC0 out = kernel;
    // canonical tap order for hashing and deterministic iteration
    std::vector<std::size_t> order(out.offsets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.offsets[a] < out.offsets[b]; });
    KernelC0 sorted = out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted.offsets[i] = out.offsets[order[i]];
        sorted.values[i] = out.values[order[i]];
    }
    out = sorted;
    int radius = 0;
    for (const auto& o : out.offsets)
        for (int j = 0; j < out.d; ++j) radius = std::max(radius, std::abs(o[j]));
    out.radius_cells = radius;

    const double norm = kernel_sup_l1_norm(out);
    if (!(norm > 0.0)) throw std::invalid_argument("validate_kernel: kernel vanishes");
    if (std::abs(norm - 1.0) > 1e-15) {
        for (auto& v : out.values)
            for (double& x : v) x /= norm;
    }
    if (report) {
        report->norm_before = norm;
        report->evenness_gap = evenness;
        report->radius_cells = out.radius_cells;
        report->tap_count = out.offsets.size();
    }
    return out;
}

// Default kernel: tensorized raised-cosine bump with physical radius
// radius_phys, discretized at spacing h, scalar profile times the identity in
// channel space, then normalized.
inline KernelC0 default_bump_kernel(int d, double h, int kappa = 1, double radius_phys = 2.0) {
    KernelC0 k;
    k.d = d;
    k.kappa = kappa;
    k.h = h;
    k.profile = "raised-cosine";
    const int rc = static_cast<int>(std::floor(radius_phys / h + 1e-12));
    for (const auto& o : detail::box_offsets(d, rc)) {
        double prof = 1.0;
        for (int j = 0; j < d; ++j) prof *= 0.5 * (1.0 + std::cos(M_PI * (o[j] * h) / radius_phys));
        k.offsets.push_back(o);
        std::vector<double> val(static_cast<std::size_t>(kappa) * static_cast<std::size_t>(kappa), 0.0);
        for (int c = 0; c < kappa; ++c) val[static_cast<std::size_t>(c) * static_cast<std::size_t>(kappa) + static_cast<std::size_t>(c)] = prof;
        k.values.push_back(std::move(val));
    }
    return validate_kernel(k);
}

// Covariance c = c0 * c0 (even kernels), with the discrete convolution weight
// h^d: c_{cc'}(y) = h^d sum_v sum_e c0_{ce}(v) c0_{c'e}(v+y).
struct KernelCovariance {
    int d = 0;
    int kappa = 1;
    double h = 1.0;
    std::map<std::array<int, 3>, std::vector<double>> lags;

    double entry(const std::array<int, 3>& lag, int c, int cp) const {
        auto it = lags.find(lag);
        if (it == lags.end()) return 0.0;
        return it->second[static_cast<std::size_t>(c) * static_cast<std::size_t>(kappa) + static_cast<std::size_t>(cp)];
    }
};

inline KernelCovariance kernel_covariance(const KernelC0& k) {
    KernelCovariance cov;
    cov.d = k.d;
    cov.kappa = k.kappa;
    cov.h = k.h;
    const double vol = k.cell_volume();
    const std::size_t kk = static_cast<std::size_t>(k.kappa);
    for (std::size_t s = 0; s < k.offsets.size(); ++s) {
        for (std::size_t t = 0; t < k.offsets.size(); ++t) {
            std::array<int, 3> lag{k.offsets[t][0] - k.offsets[s][0],
                                   k.offsets[t][1] - k.offsets[s][1],
                                   k.offsets[t][2] - k.offsets[s][2]};
            auto& acc = cov.lags[lag];
            if (acc.empty()) acc.assign(kk * kk, 0.0);
            for (std::size_t c = 0; c < kk; ++c)
                for (std::size_t cp = 0; cp < kk; ++cp) {
                    double s_e = 0.0;
                    for (std::size_t e = 0; e < kk; ++e)
                        s_e += k.values[s][c * kk + e] * k.values[t][cp * kk + e];
                    acc[c * kk + cp] += vol * s_e;
                }
        }
    }
    return cov;
}

} // namespace homoglab
