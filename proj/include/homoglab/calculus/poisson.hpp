#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "homoglab/calculus/fft.hpp"
#include "homoglab/core/errors.hpp"
#include "homoglab/core/fields.hpp"

namespace homoglab {

// -Laplace(u) = rhs on the torus via the exact discrete symbol
// (4/spacing^2) sum_j sin^2(pi k_j / n); the zero mode is projected out and u
// is returned zero-mean. The rhs must be (numerically) zero-mean: a genuine
// mean has no periodic solution.
inline ScalarField solve_poisson(const ScalarField& rhs, double spacing,
                                 double mean_tolerance = 1e-10) {
    const TorusGrid& g = rhs.grid();
    const double mean = rhs.mean();
    const double scale = std::max(rhs.rms(), 1e-300);
    if (std::abs(mean) > mean_tolerance * scale) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "solve_poisson: rhs has nonzero mean %.6g (rms %.6g); no periodic solution exists",
                      mean, scale);
        throw solver_error(buf);
    }
    SpectralWorkspace ws(g);
    double* r = ws.real_buffer();
    for (std::size_t s = 0; s < g.cells(); ++s) r[s] = rhs[s];
    ws.forward();
    auto* spec = ws.spectral_buffer();
    for (std::size_t i = 0; i < ws.complex_size(); ++i) {
        const auto k = ws.freq(i);
        const double sym = laplace_symbol(k, g.dim(), g.n(), spacing);
        spec[i] = (sym == 0.0) ? 0.0 : spec[i] / sym;
    }
    ws.backward();
    ScalarField u(g);
    for (std::size_t s = 0; s < g.cells(); ++s) u[s] = r[s];
    u.subtract_mean();
    return u;
}

} // namespace homoglab
