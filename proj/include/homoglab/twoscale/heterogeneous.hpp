#pragma once

#include "homoglab/calculus/divform.hpp"
#include "homoglab/calculus/stencils.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

struct HeterogeneousSolution {
    ScalarField u;
    VectorField grad; // macroscopic forward gradient
    SolverReport report;
    double eps = 0.0;

    HeterogeneousSolution(ScalarField uu, VectorField gg, SolverReport r, double e)
        : u(std::move(uu)), grad(std::move(gg)), report(std::move(r)), eps(e) {}
};

// -div(a(./eps) grad u) = div f read in the macroscopic chart: the sampled
// coefficient lives on the lattice, f is evaluated at x = j/N, and the solve
// runs at spacing 1/N. Pass a.adjoint() and g for the dual problem.
inline HeterogeneousSolution solve_heterogeneous(const CoefficientField& a, const FourierVectorPoly& f,
                                                 double tol) {
    const TorusGrid& g = a.grid();
    const double mac = 1.0 / g.n();
    VectorField fs = f.sample(g);
    SolverReport rep;
    ScalarField u = solve_divform(a, fs, tol, mac, &rep);
    VectorField grad = gradient(u, mac);
    return HeterogeneousSolution(std::move(u), std::move(grad), std::move(rep), g.eps());
}

} // namespace homoglab
