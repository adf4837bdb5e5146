#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "homoglab/calculus/stencils.hpp"
#include "homoglab/commutators/commutator.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/core/multiindex.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/twoscale/cascade.hpp"
#include "homoglab/twoscale/expansion.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// e_j . Xi^n[grad u] against its dual-corrector resummation: the (-eps)^n
// derivative of the (a* phi* - sigma*) pairing with grad u and the phi* f
// load, plus the (-eps)^k chains of dual corrector blocks dotted into f.
// Componentwise max of the L2 gap over the full commutator norm; the k = 0
// chain carries the bare dual gradient without the unit-vector completion.
inline double hill_mandel_residual(const CoefficientField& a, const AbarTensors& primal,
                                   const CorrectorSet& dual_set, const VectorField& grad_u,
                                   const VectorField& f, int n, double eps) {
    const TorusGrid& g = dual_set.grid;
    const int d = g.dim();
    if (!dual_set.dual) throw std::invalid_argument("hill_mandel_residual: dual corrector hierarchy required");
    if (n < 1 || n > dual_set.max_order())
        throw std::invalid_argument("hill_mandel_residual: order exceeds dual hierarchy");
    const double mac = 1.0 / g.n();

    const CoefficientField a_star = a.adjoint();
    const VectorField xi = commutator(a, primal, grad_u, n, eps);

    double worst = 0.0;
    for (int j = 0; j < d; ++j) {
        ScalarField rhs(g);

        const CorrectorLevel& top = dual_set.level(n);
        const double en = std::pow(-eps, n);
        for (const IndexTuple& t : enumerate_tuples(d, n)) {
            IndexTuple dt(1, j);
            dt.insert(dt.end(), t.begin(), t.end() - 1);
            const ScalarField& phi = top.phi[top.index_of(dt)];
            const SkewField& sigma = top.sigma[top.index_of(dt)];
            const int last = t.back();
            ScalarField bracket(g);
            for (std::size_t s = 0; s < g.cells(); ++s) {
                double v = 0.0;
                const double* blk = a_star.block(s);
                for (int m = 0; m < d; ++m)
                    v += (blk[m * d + last] * phi[s] - sigma.get(m, last, s)) * grad_u.at(m, s);
                v += phi[s] * f.at(last, s);
                bracket[s] = v;
            }
            const ScalarField der = iterated_forward_diff(bracket, t, mac);
            for (std::size_t s = 0; s < g.cells(); ++s) rhs[s] += en * der[s];
        }

        for (int k = 0; k < n; ++k) {
            const double ek = std::pow(-eps, k);
            for (const IndexTuple& tk : enumerate_tuples(d, k)) {
                IndexTuple full(1, j);
                full.insert(full.end(), tk.begin(), tk.end());
                VectorField block = (k == 0)
                                        ? gradient(dual_set.level(1).phi[dual_set.level(1).index_of(full)], g.h())
                                        : corrector_block(dual_set, full);
                ScalarField bracket(g);
                for (std::size_t s = 0; s < g.cells(); ++s) {
                    double v = 0.0;
                    for (int m = 0; m < d; ++m) v += block.at(m, s) * f.at(m, s);
                    bracket[s] = v;
                }
                const ScalarField der = iterated_forward_diff(bracket, tk, mac);
                for (std::size_t s = 0; s < g.cells(); ++s) rhs[s] += ek * der[s];
            }
        }

        long double gap = 0.0L;
        const double* xj = xi.component(j);
        for (std::size_t s = 0; s < g.cells(); ++s) {
            const double dgap = xj[s] - rhs[s];
            gap += static_cast<long double>(dgap) * dgap;
        }
        worst = std::max(worst, std::sqrt(static_cast<double>(gap / static_cast<long double>(g.cells()))));
    }

    const double denom = std::sqrt(average_sqnorm(xi));
    return denom == 0.0 ? worst : worst / denom;
}

struct ReductionTerms {
    double load_pairing = 0.0;      // integral of g . grad u
    double cascade_pairing = 0.0;   // integral of grad vbar . f
    double commutator_pairing = 0.0;
    double tail_pairing = 0.0;      // truncated dual-tensor tail
    double residual = 0.0;          // relative defect of the four-term identity
};

// int g.grad u - int grad vbar.f - int grad vbar.Xi^n[grad u]
//   - int (sum_{k=2}^n sum_{j=n+2-k}^n eps^{k-1} eps^{j-1}
//          abar*^k D^k vtilde^j) . grad u,
// normalized by the term magnitudes. vbar must be the dual cascade driven by
// g with the same tensors passed here; order 1 closes at solver tolerance.
inline ReductionTerms reduction_identity_residual(const VectorField& grad_u, const CascadeSolution& vbar,
                                                  const VectorField& xi, const VectorField& f,
                                                  const VectorField& gprobe, const AbarTensors& dual,
                                                  int n, double eps) {
    const TorusGrid& g = grad_u.grid();
    const int d = g.dim();
    if (vbar.order != n) throw std::invalid_argument("reduction_identity_residual: cascade order mismatch");
    if (n > dual.max_order) throw std::invalid_argument("reduction_identity_residual: order exceeds tensors");
    const double mac = 1.0 / g.n();

    ReductionTerms out;
    out.load_pairing = average_dot(gprobe, grad_u);

    const VectorField grad_v = gradient(vbar.assembled.sample(g), mac);
    out.cascade_pairing = average_dot(grad_v, f);
    out.commutator_pairing = average_dot(grad_v, xi);

    VectorField tail(g);
    for (int k = 2; k <= n; ++k) {
        for (int lev = n + 2 - k; lev <= n; ++lev) {
            const double scale = std::pow(eps, k - 1) * std::pow(eps, lev - 1);
            const FourierPoly& vt = vbar.u_tilde[static_cast<std::size_t>(lev - 1)];
            for (const IndexTuple& t : enumerate_tuples(d, k)) {
                const ScalarField der = vt.discrete_derivative(t, g.n()).sample(g);
                for (int m = 0; m < d; ++m) {
                    const double b = dual.entry(k, m, t);
                    if (b == 0.0) continue;
                    double* tm = tail.component(m);
                    for (std::size_t s = 0; s < g.cells(); ++s) tm[s] += scale * b * der[s];
                }
            }
        }
    }
    out.tail_pairing = average_dot(tail, grad_u);

    const double defect = out.load_pairing - out.cascade_pairing - out.commutator_pairing - out.tail_pairing;
    const double denom = std::abs(out.load_pairing) + std::abs(out.cascade_pairing) +
                         std::abs(out.commutator_pairing) + std::abs(out.tail_pairing);
    out.residual = denom == 0.0 ? std::abs(defect) : std::abs(defect) / denom;
    return out;
}

} // namespace homoglab
