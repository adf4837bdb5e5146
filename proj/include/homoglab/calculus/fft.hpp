#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "homoglab/core/fields.hpp"
#include "homoglab/core/grid.hpp"
#include "homoglab/core/smallmat.hpp"

namespace homoglab {

namespace detail {
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

// Real-to-complex transforms on one grid. Each instance owns its buffers and
// plans, so concurrent use requires one workspace per thread; plan creation
// itself is serialized because FFTW planning is not thread safe.
class SpectralWorkspace {
public:
    explicit SpectralWorkspace(const TorusGrid& g) : grid_(&g) {
        const int d = g.dim();
        for (int k = 0; k < d; ++k) shape_[k] = g.n();
        complex_size_ = 1;
        for (int k = 0; k + 1 < d; ++k) complex_size_ *= static_cast<std::size_t>(g.n());
        complex_size_ *= static_cast<std::size_t>(g.n() / 2 + 1);
        real_ = fftw_alloc_real(g.cells());
        spec_ = fftw_alloc_complex(complex_size_);
        if (!real_ || !spec_) throw std::bad_alloc();
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fwd_ = fftw_plan_dft_r2c(d, shape_.data(), real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r(d, shape_.data(), spec_, real_, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("SpectralWorkspace: FFTW planning failed");
    }

    ~SpectralWorkspace() {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    const TorusGrid& grid() const { return *grid_; }
    std::size_t complex_size() const { return complex_size_; }

    double* real_buffer() { return real_; }
    std::complex<double>* spectral_buffer() { return reinterpret_cast<std::complex<double>*>(spec_); }

    void forward() { fftw_execute(fwd_); }
    // FFTW's c2r is unnormalized and destroys the spectral buffer; callers
    // treat a backward() as consuming the spectrum.
    void backward() {
        fftw_execute(bwd_);
        const double inv = 1.0 / static_cast<double>(grid_->cells());
        for (std::size_t i = 0; i < grid_->cells(); ++i) real_[i] *= inv;
    }

    // Frequency tuple of a complex-layout index; the last axis holds 0..n/2.
    std::array<int, 3> freq(std::size_t idx) const {
        std::array<int, 3> k{0, 0, 0};
        const int d = grid_->dim();
        const std::size_t last = static_cast<std::size_t>(grid_->n() / 2 + 1);
        k[d - 1] = static_cast<int>(idx % last);
        std::size_t rest = idx / last;
        for (int j = d - 2; j >= 0; --j) {
            k[j] = static_cast<int>(rest % static_cast<std::size_t>(grid_->n()));
            rest /= static_cast<std::size_t>(grid_->n());
        }
        return k;
    }

private:
    const TorusGrid* grid_;
    std::array<int, 3> shape_{1, 1, 1};
    std::size_t complex_size_ = 0;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

// Symbols of the shared stencils at frequency k (theta_j = 2 pi k_j / n):
// forward difference g_j = (e^{i theta_j} - 1)/spacing, edge-to-center
// averaging p_j = (1 + e^{-i theta_j})/2.
inline std::complex<double> grad_symbol(int kj, int n, double spacing) {
    const double th = 2.0 * M_PI * kj / n;
    return (std::complex<double>(std::cos(th), std::sin(th)) - 1.0) / spacing;
}

inline std::complex<double> avg_symbol(int kj, int n) {
    const double th = 2.0 * M_PI * kj / n;
    return 0.5 * (std::complex<double>(1.0, 0.0) + std::complex<double>(std::cos(th), -std::sin(th)));
}

// Symbol of -div(flux_m grad .) for a constant matrix m: the diagonal of m
// acts on co-located edge values, the off-diagonal part through the averaging
// pair, matching the variable-coefficient operator exactly when m is constant.
inline std::complex<double> divform_symbol(const Mat& m, const std::array<int, 3>& k, int n, double spacing) {
    const int d = m.d;
    std::array<std::complex<double>, 3> g{}, p{};
    for (int j = 0; j < d; ++j) {
        g[j] = grad_symbol(k[j], n, spacing);
        p[j] = avg_symbol(k[j], n);
    }
    std::complex<double> s = 0.0;
    for (int j = 0; j < d; ++j) s += m(j, j) * std::norm(g[j]);
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) {
            if (j == l) continue;
            s += std::conj(p[j] * g[j]) * m(j, l) * (p[l] * g[l]);
        }
    return s;
}

// Symbol of -div(m grad .) when the constant matrix multiplies the edge
// vector pointwise (no averaging): g^H m g. This is the operator the
// homogenized cascade inverts; its real part is bounded below by
// lambda |g|^2 whenever Sym m >= lambda.
inline std::complex<double> constant_symbol(const Mat& m, const std::array<int, 3>& k, int n,
                                            double spacing) {
    const int d = m.d;
    std::array<std::complex<double>, 3> g{};
    for (int j = 0; j < d; ++j) g[j] = grad_symbol(k[j], n, spacing);
    std::complex<double> s = 0.0;
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) s += std::conj(g[j]) * m(j, l) * g[l];
    return s;
}

// Laplacian symbol (m = Id): (4/spacing^2) sum_j sin^2(pi k_j / n).
inline double laplace_symbol(const std::array<int, 3>& k, int d, int n, double spacing) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
        const double x = std::sin(M_PI * k[j] / n);
        s += x * x;
    }
    return 4.0 * s / (spacing * spacing);
}

} // namespace homoglab
