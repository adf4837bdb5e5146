#pragma once

#include "homoglab/core/fields.hpp"
#include "homoglab/core/grid.hpp"

namespace homoglab {

// Shared stencil family: forward-difference gradient, backward-difference
// divergence (its exact negative adjoint under the h^d inner product), the
// same pair for curls, and the edge/center averaging pair used by the
// divergence-form flux. Every operator takes the spacing explicitly; the
// lattice is shared between microscopic (spacing h) and macroscopic
// (spacing 1/n on the unit torus) views of the same fields.

inline VectorField gradient(const ScalarField& u, double spacing) {
    const TorusGrid& g = u.grid();
    VectorField out(g);
    for (int k = 0; k < g.dim(); ++k) {
        double* o = out.component(k);
        for (std::size_t s = 0; s < g.cells(); ++s) o[s] = (u[g.up(k, s)] - u[s]) / spacing;
    }
    return out;
}

inline ScalarField divergence(const VectorField& f, double spacing) {
    const TorusGrid& g = f.grid();
    ScalarField out(g);
    for (int k = 0; k < g.dim(); ++k) {
        const double* p = f.component(k);
        for (std::size_t s = 0; s < g.cells(); ++s) out[s] += (p[s] - p[g.down(k, s)]) / spacing;
    }
    return out;
}

// (curl X)_{ij} = D_i X_j - D_j X_i with the forward-difference stencil.
inline SkewField curl_pair(const VectorField& x, double spacing) {
    const TorusGrid& g = x.grid();
    SkewField out(g);
    for (int i = 0; i < g.dim(); ++i)
        for (int j = i + 1; j < g.dim(); ++j) {
            double* o = out.pair_plane(SkewField::pair_index(g.dim(), i, j));
            const double* xi = x.component(i);
            const double* xj = x.component(j);
            for (std::size_t s = 0; s < g.cells(); ++s)
                o[s] = ((xj[g.up(i, s)] - xj[s]) - (xi[g.up(j, s)] - xi[s])) / spacing;
        }
    return out;
}

// Row divergence of an antisymmetric matrix field: (div sigma)_i = D-_j sigma_ij.
inline VectorField skew_row_divergence(const SkewField& sig, double spacing) {
    const TorusGrid& g = sig.grid();
    VectorField out(g);
    for (int i = 0; i < g.dim(); ++i) {
        double* o = out.component(i);
        for (int j = 0; j < g.dim(); ++j) {
            if (i == j) continue;
            for (std::size_t s = 0; s < g.cells(); ++s)
                o[s] += (sig.get(i, j, s) - sig.get(i, j, g.down(j, s))) / spacing;
        }
    }
    return out;
}

// Edge-to-center averaging P_j and its adjoint, applied componentwise.
inline void avg_edge_to_center(const TorusGrid& g, int j, const double* in, double* out) {
    for (std::size_t s = 0; s < g.cells(); ++s) out[s] = 0.5 * (in[s] + in[g.down(j, s)]);
}

inline void avg_center_to_edge(const TorusGrid& g, int j, const double* in, double* out) {
    for (std::size_t s = 0; s < g.cells(); ++s) out[s] = 0.5 * (in[s] + in[g.up(j, s)]);
}

// Repeated forward differences of a scalar field along a direction tuple.
inline ScalarField iterated_forward_diff(const ScalarField& u, const std::vector<int>& dirs, double spacing) {
    ScalarField cur = u;
    const TorusGrid& g = u.grid();
    for (int k : dirs) {
        ScalarField next(g);
        for (std::size_t s = 0; s < g.cells(); ++s) next[s] = (cur[g.up(k, s)] - cur[s]) / spacing;
        cur = next;
    }
    return cur;
}

} // namespace homoglab
