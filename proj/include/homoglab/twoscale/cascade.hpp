#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "homoglab/calculus/divform.hpp"
#include "homoglab/calculus/stencils.hpp"
#include "homoglab/core/errors.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// pointwise constant-matrix flux m W, the constitutive form the cascade and
// the commutator tensors share
inline VectorField apply_constant_pointwise(const Mat& m, const VectorField& w) {
    const TorusGrid& g = w.grid();
    VectorField out(g);
    for (int j = 0; j < m.d; ++j) {
        double* oj = out.component(j);
        for (int l = 0; l < m.d; ++l) {
            const double c = m(j, l);
            if (c == 0.0) continue;
            const double* wl = w.component(l);
            for (std::size_t s = 0; s < g.cells(); ++s) oj[s] += c * wl[s];
        }
    }
    return out;
}

struct CascadeSolution {
    int order = 0;
    double eps = 0.0;
    std::vector<FourierPoly> u_tilde;      // levels 1..order
    FourierPoly assembled;                 // sum_k eps^{k-1} u_tilde^k
    std::vector<double> equation_residual; // stencil-checked, roundoff-sized

    CascadeSolution() : assembled(1) {}
};

// Triangular hierarchy of homogenized equations on the n-per-side unit torus,
// solved mode by mode with the exact discrete symbols:
// -div(abar^1 grad u~^n) = div sum_{k=2}^n abar^k D^k u~^{n+1-k}, all
// derivatives realized as forward-difference symbols. Solutions stay finite
// trigonometric polynomials supported on the modes of f.
inline CascadeSolution homogenized_cascade(const AbarTensors& abar, const FourierVectorPoly& f, int n,
                                           const TorusGrid& g, double eps, double singular_floor = 1e-14) {
    const int d = abar.d;
    if (f.dim() != d) throw std::invalid_argument("homogenized_cascade: dimension mismatch");
    if (n < 1 || n > abar.max_order) throw std::invalid_argument("homogenized_cascade: order exceeds tensors");
    for (const FourierPoly& c : f.comp) c.check_resolvable(g);

    const Mat a1 = abar.order1();
    {
        Mat sym = a1.sym();
        if (sym.min_sym_eig() <= singular_floor)
            throw solver_error("homogenized_cascade: abar^1 is singular or not elliptic");
    }

    auto symbol = [&](const FourierPoly::Wave& k) { return constant_symbol(a1, k, g.n(), 1.0 / g.n()); };
    auto gsym = [&](int kj) { return grad_symbol(kj, g.n(), 1.0 / g.n()); };

    CascadeSolution sol;
    sol.order = n;
    sol.eps = eps;
    sol.assembled = FourierPoly(d);

    // per-level right-hand side in divergence form: level 1 takes f itself,
    // level m >= 2 takes G_j = sum_{k=2}^m abar^k D^k u~^{m+1-k}
    for (int m = 1; m <= n; ++m) {
        FourierPoly rhs_div(d);
        std::vector<FourierPoly> rhs_vec;
        if (m == 1) {
            rhs_div = f.discrete_divergence(g.n());
        } else {
            FourierVectorPoly gvec(d);
            for (int k = 2; k <= m; ++k) {
                const FourierPoly& usrc = sol.u_tilde[static_cast<std::size_t>(m - k)]; // u~^{m+1-k}
                for (const IndexTuple& t : enumerate_tuples(d, k)) {
                    FourierPoly der = usrc.mapped([&](const FourierPoly::Wave& kv) {
                        std::complex<double> fct(1.0, 0.0);
                        for (int dir : t) fct *= gsym(kv[static_cast<std::size_t>(dir)]);
                        return fct;
                    });
                    for (int j = 0; j < d; ++j) {
                        const double b = abar.entry(k, j, t);
                        if (b != 0.0) gvec.comp[static_cast<std::size_t>(j)] += der.scaled(b);
                    }
                }
            }
            rhs_div = gvec.discrete_divergence(g.n());
        }

        FourierPoly u = rhs_div.mapped([&](const FourierPoly::Wave& kv) {
            const std::complex<double> s = symbol(kv);
            if (std::abs(s) <= singular_floor)
                throw solver_error("homogenized_cascade: vanishing symbol on a nonzero mode");
            return 1.0 / s;
        });
        sol.u_tilde.push_back(u);
        sol.assembled += u.scaled(std::pow(eps, m - 1));
    }

    // independent residual check through the grid stencils rather than the
    // symbols that produced the solution
    const double spacing = 1.0 / g.n();
    for (int m = 1; m <= n; ++m) {
        VectorField flux = apply_constant_pointwise(a1, gradient(sol.u_tilde[static_cast<std::size_t>(m - 1)].sample(g), spacing));
        VectorField forcing(g);
        if (m == 1) {
            forcing = f.sample(g);
        } else {
            for (int k = 2; k <= m; ++k) {
                const FourierPoly& usrc = sol.u_tilde[static_cast<std::size_t>(m - k)];
                for (const IndexTuple& t : enumerate_tuples(d, k)) {
                    ScalarField der = usrc.discrete_derivative(t, g.n()).sample(g);
                    for (int j = 0; j < d; ++j) {
                        const double b = abar.entry(k, j, t);
                        if (b == 0.0) continue;
                        double* fj = forcing.component(j);
                        for (std::size_t s = 0; s < g.cells(); ++s) fj[s] += b * der[s];
                    }
                }
            }
        }
        flux += forcing;
        const ScalarField resid = divergence(flux, spacing);
        const ScalarField denom = divergence(forcing, spacing);
        const double dn = denom.l2();
        sol.equation_residual.push_back(dn == 0.0 ? resid.l2() : resid.l2() / dn);
    }
    return sol;
}

} // namespace homoglab
