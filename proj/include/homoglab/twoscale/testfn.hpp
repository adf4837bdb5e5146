#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "homoglab/calculus/fft.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/core/grid.hpp"
#include "homoglab/core/multiindex.hpp"

namespace homoglab {

// Finite trigonometric polynomial on the unit torus, stored as signed Fourier
// modes with the Hermitian pairing kept explicit. Test data and cascade
// solutions both live here: derivatives (analytic or discrete-symbol) and
// constant-coefficient solves are exact mode-by-mode operations, so test
// functions never get differentiated numerically.
class FourierPoly {
public:
    using Wave = std::array<int, 3>;

    explicit FourierPoly(int d) : d_(d) {
        if (d < 1 || d > 3) throw std::invalid_argument("FourierPoly: dimension must be 1..3");
    }

    int dim() const { return d_; }
    bool empty() const { return modes_.empty(); }
    const std::map<Wave, std::complex<double>>& modes() const { return modes_; }

    // amplitude * cos(2 pi wave . x + phase); zero wave vectors are rejected
    // to keep every profile mean-free
    void add_cosine(const Wave& wave, double amplitude, double phase = 0.0) {
        bool zero = true;
        for (int j = 0; j < d_; ++j) zero = zero && wave[j] == 0;
        for (int j = d_; j < 3; ++j)
            if (wave[j] != 0) throw std::invalid_argument("FourierPoly: wave vector exceeds dimension");
        if (zero) throw std::invalid_argument("FourierPoly: zero wave vector breaks the zero-mean invariant");
        const std::complex<double> half(0.5 * amplitude * std::cos(phase), 0.5 * amplitude * std::sin(phase));
        accumulate(wave, half);
        accumulate(negate(wave), std::conj(half));
    }

    void accumulate(const Wave& k, std::complex<double> amp) {
        auto it = modes_.find(k);
        if (it == modes_.end()) {
            modes_.emplace(k, amp);
        } else {
            it->second += amp;
            if (std::abs(it->second) == 0.0) modes_.erase(it);
        }
    }

    FourierPoly& operator+=(const FourierPoly& o) {
        for (const auto& [k, a] : o.modes_) accumulate(k, a);
        return *this;
    }

    FourierPoly& operator*=(double c) {
        for (auto& [k, a] : modes_) a *= c;
        return *this;
    }

    FourierPoly scaled(double c) const {
        FourierPoly out = *this;
        out *= c;
        return out;
    }

    // multiply each mode by a wave-dependent factor; factors with
    // s(-k) = conj(s(k)) keep the polynomial real
    template <class SymbolFn>
    FourierPoly mapped(SymbolFn&& s) const {
        FourierPoly out(d_);
        for (const auto& [k, a] : modes_) {
            const std::complex<double> v = a * s(k);
            if (std::abs(v) != 0.0) out.modes_.emplace(k, v);
        }
        return out;
    }

    FourierPoly analytic_derivative(const IndexTuple& dirs) const {
        return mapped([&](const Wave& k) {
            std::complex<double> f(1.0, 0.0);
            for (int dir : dirs) f *= std::complex<double>(0.0, 2.0 * M_PI * k[static_cast<std::size_t>(dir)]);
            return f;
        });
    }

    // forward differences of the sampled profile on an n-per-side unit torus
    // (spacing 1/n), exact through the stencil symbol
    FourierPoly discrete_derivative(const IndexTuple& dirs, int n) const {
        return mapped([&](const Wave& k) {
            std::complex<double> f(1.0, 0.0);
            for (int dir : dirs) f *= grad_symbol(k[static_cast<std::size_t>(dir)], n, 1.0 / n);
            return f;
        });
    }

    double value(const std::array<double, 3>& x) const {
        long double acc = 0.0L;
        for (const auto& [k, a] : modes_) {
            double phase = 0.0;
            for (int j = 0; j < d_; ++j) phase += k[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
            phase *= 2.0 * M_PI;
            acc += a.real() * std::cos(phase) - a.imag() * std::sin(phase);
        }
        return static_cast<double>(acc);
    }

    double derivative_at(const IndexTuple& dirs, const std::array<double, 3>& x) const {
        return analytic_derivative(dirs).value(x);
    }

    int max_wave_component() const {
        int m = 0;
        for (const auto& [k, a] : modes_) {
            (void)a;
            for (int j = 0; j < d_; ++j) m = std::max(m, std::abs(k[static_cast<std::size_t>(j)]));
        }
        return m;
    }

    void check_resolvable(const TorusGrid& g) const {
        if (g.dim() != d_) throw std::invalid_argument("FourierPoly: grid dimension mismatch");
        if (2 * max_wave_component() >= g.n())
            throw std::invalid_argument("FourierPoly: wave vector at or beyond the grid Nyquist limit");
    }

    // sampled at macroscopic positions x = coords / n
    ScalarField sample(const TorusGrid& g) const {
        check_resolvable(g);
        ScalarField out(g);
        for (std::size_t s = 0; s < g.cells(); ++s) {
            const std::array<int, 3> c = g.coords(s);
            std::array<double, 3> x{0.0, 0.0, 0.0};
            for (int j = 0; j < d_; ++j) x[static_cast<std::size_t>(j)] = static_cast<double>(c[static_cast<std::size_t>(j)]) / g.n();
            out[s] = value(x);
        }
        return out;
    }

    ScalarField sample_derivative(const TorusGrid& g, const IndexTuple& dirs) const {
        return analytic_derivative(dirs).sample(g);
    }

private:
    static Wave negate(const Wave& k) { return Wave{-k[0], -k[1], -k[2]}; }

    int d_;
    std::map<Wave, std::complex<double>> modes_;
};

// vector-valued test data (f, g): one polynomial per component
struct FourierVectorPoly {
    explicit FourierVectorPoly(int d) : comp(static_cast<std::size_t>(d), FourierPoly(d)) {}

    int dim() const { return static_cast<int>(comp.size()); }

    VectorField sample(const TorusGrid& g) const {
        VectorField out(g);
        for (int j = 0; j < dim(); ++j) {
            ScalarField c = comp[static_cast<std::size_t>(j)].sample(g);
            for (std::size_t s = 0; s < g.cells(); ++s) out.at(j, s) = c[s];
        }
        return out;
    }

    // div via the backward-difference symbol, exact on the sampled lattice
    FourierPoly discrete_divergence(int n) const {
        FourierPoly out(dim());
        for (int j = 0; j < dim(); ++j) {
            FourierPoly dj = comp[static_cast<std::size_t>(j)].mapped([&](const FourierPoly::Wave& k) {
                // backward difference symbol: -conj(g_j)
                return -std::conj(grad_symbol(k[static_cast<std::size_t>(j)], n, 1.0 / n));
            });
            out += dj;
        }
        return out;
    }

    std::vector<FourierPoly> comp;
};

// default smooth probes used by the suites: a pair of low-frequency modes per
// component, deterministic in the channel index
inline FourierPoly default_scalar_probe(int d, int variant = 0) {
    FourierPoly w(d);
    FourierPoly::Wave k1{0, 0, 0}, k2{0, 0, 0};
    k1[0] = 1;
    k2[static_cast<std::size_t>((variant + 1) % d)] = 1;
    if (d > 1) k2[0] = (variant % 2 == 0) ? 1 : -1;
    w.add_cosine(k1, 1.0, 0.3 + 0.2 * variant);
    w.add_cosine(k2, 0.7, 1.1 * (variant + 1));
    return w;
}

inline FourierVectorPoly default_vector_probe(int d, int variant = 0) {
    FourierVectorPoly f(d);
    for (int j = 0; j < d; ++j) {
        FourierPoly::Wave k{0, 0, 0};
        k[static_cast<std::size_t>(j)] = 1;
        f.comp[static_cast<std::size_t>(j)].add_cosine(k, 1.0 - 0.25 * j, 0.4 + 0.7 * variant + j);
        if (d > 1) {
            FourierPoly::Wave k2{0, 0, 0};
            k2[static_cast<std::size_t>((j + 1) % d)] = 1;
            k2[static_cast<std::size_t>(j)] = -1;
            f.comp[static_cast<std::size_t>(j)].add_cosine(k2, 0.5, 0.9 * variant + 2.0 * j);
        }
    }
    return f;
}

} // namespace homoglab
