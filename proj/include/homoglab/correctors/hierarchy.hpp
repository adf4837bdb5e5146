#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "homoglab/calculus/divform.hpp"
#include "homoglab/calculus/poisson.hpp"
#include "homoglab/calculus/stencils.hpp"
#include "homoglab/core/errors.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/core/multiindex.hpp"
#include "homoglab/random/coefficient.hpp"

namespace homoglab {

// One order of the hierarchy: for every multi-index (i1..in) the corrector
// phi, the flux q, the flux corrector sigma, and the column abar e_{i_n} of
// the homogenized tensor, plus the identity residuals recorded at build time.
struct CorrectorLevel {
    int order = 0;
    std::vector<IndexTuple> tuples;
    std::vector<ScalarField> phi;
    std::vector<VectorField> q;
    std::vector<SkewField> sigma;
    std::vector<std::array<double, 3>> abar;
    std::vector<SolverReport> reports;

    std::vector<double> rhs_div_norm;   // ||div driver||_2, the residual denominator
    std::vector<double> div_q_norm;     // ||div q||_2, equals the solver residual
    std::vector<double> q_mean_abs;     // max |mean q| component per sample
    std::vector<double> curl_mean_abs;  // max |mean curl q| entry (flags assembly bugs)
    std::vector<double> sigma_gap_norm; // ||div sigma - q||_2
    std::vector<double> sigma_gap_bound; // ||div q||_2 / spectral gap

    std::size_t index_of(const IndexTuple& t) const { return tuple_rank(dim_, t); }
    int dim() const { return dim_; }
    int dim_ = 0;
};

struct CorrectorSet {
    TorusGrid grid{1, 2, 1.0};
    double spacing = 0.0; // lattice spacing of the coefficient sample
    bool dual = false;
    int stationary_order = 0; // ceil(d/2); orders beyond carry no stationary-theory prediction
    std::vector<CorrectorLevel> levels;

    int max_order() const { return static_cast<int>(levels.size()); }
    const CorrectorLevel& level(int n) const {
        if (n < 1 || n > max_order()) throw std::out_of_range("CorrectorSet: level " + std::to_string(n));
        return levels[static_cast<std::size_t>(n - 1)];
    }

    Mat abar1() const {
        const CorrectorLevel& l1 = level(1);
        Mat m = Mat::zero(grid.dim());
        for (std::size_t t = 0; t < l1.tuples.size(); ++t)
            for (int j = 0; j < grid.dim(); ++j) m(j, l1.tuples[t][0]) = l1.abar[t][j];
        return m;
    }

    // abar entry B[j; (i1..in)], the j-component of abar^n_{i1..i_{n-1}} e_{i_n}
    double abar_entry(int n, int j, const IndexTuple& t) const {
        const CorrectorLevel& l = level(n);
        return l.abar[l.index_of(t)][static_cast<std::size_t>(j)];
    }
};

namespace detail {

inline void mean_vector_longdouble(const VectorField& v, double* out) {
    const TorusGrid& g = v.grid();
    for (int k = 0; k < g.dim(); ++k) {
        long double acc = 0.0L;
        const double* p = v.component(k);
        for (std::size_t s = 0; s < g.cells(); ++s) acc += p[s];
        out[k] = static_cast<double>(acc / static_cast<long double>(g.cells()));
    }
}

// driver (a phi^{n-1} - sigma^{n-1}) e_dir; for n = 1 the parent is phi^0 = 1,
// sigma^0 = 0, so the driver is the dir-column of a
inline VectorField corrector_driver(const CoefficientField& a, const ScalarField* phi_parent,
                                    const SkewField* sigma_parent, int dir) {
    const TorusGrid& g = a.grid();
    const int d = g.dim();
    VectorField drv(g);
    for (int k = 0; k < d; ++k) {
        double* out = drv.component(k);
        for (std::size_t s = 0; s < g.cells(); ++s) {
            const double scal = phi_parent ? (*phi_parent)[s] : 1.0;
            double val = a.block(s)[k * d + dir] * scal;
            if (sigma_parent) val -= sigma_parent->get(s, k, dir);
            out[s] = val;
        }
    }
    return drv;
}

} // namespace detail

// spectral gap of the discrete torus Laplacian at spacing h: smallest nonzero
// symbol value, (4/h^2) sin^2(pi/N)
inline double laplace_spectral_gap(const TorusGrid& g) {
    const double s = std::sin(M_PI / g.n());
    return 4.0 / (g.h() * g.h()) * s * s;
}

inline CorrectorLevel build_corrector_level(const CoefficientField& a, const CorrectorSet& below, int n,
                                            double tol) {
    const TorusGrid& g = a.grid();
    const int d = g.dim();
    const double h = g.h();
    if (n < 1) throw std::invalid_argument("build_corrector_level: n must be >= 1");
    if (n > 1 && below.max_order() < n - 1)
        throw std::invalid_argument("build_corrector_level: parent level missing");

    CorrectorLevel lvl;
    lvl.order = n;
    lvl.dim_ = d;
    lvl.tuples = enumerate_tuples(d, n);
    const double gap = laplace_spectral_gap(g);

    for (const IndexTuple& t : lvl.tuples) {
        const int dir = t.back();
        const ScalarField* phi_parent = nullptr;
        const SkewField* sigma_parent = nullptr;
        if (n > 1) {
            IndexTuple parent(t.begin(), t.end() - 1);
            const CorrectorLevel& pl = below.level(n - 1);
            const std::size_t pi = pl.index_of(parent);
            phi_parent = &pl.phi[pi];
            sigma_parent = &pl.sigma[pi];
        }
        VectorField drv = detail::corrector_driver(a, phi_parent, sigma_parent, dir);

        SolverReport rep;
        ScalarField phi(g);
        try {
            phi = solve_divform(a, drv, tol, h, &rep);
        } catch (const solver_error& e) {
            std::string idx;
            for (int i : t) idx += std::to_string(i + 1);
            throw solver_error("corrector level " + std::to_string(n) + ", multi-index (" + idx + "): " +
                               e.what());
        }

        VectorField q = apply_flux(a, gradient(phi, h));
        q += drv;
        double mean[3] = {0.0, 0.0, 0.0};
        detail::mean_vector_longdouble(q, mean);
        std::array<double, 3> col{0.0, 0.0, 0.0};
        for (int k = 0; k < d; ++k) col[static_cast<std::size_t>(k)] = mean[k];
        for (int k = 0; k < d; ++k) {
            double* p = q.component(k);
            for (std::size_t s = 0; s < g.cells(); ++s) p[s] -= mean[k];
        }

        double qmean[3];
        detail::mean_vector_longdouble(q, qmean);
        double qmean_abs = 0.0;
        for (int k = 0; k < d; ++k) qmean_abs = std::max(qmean_abs, std::abs(qmean[k]));

        const ScalarField divq = divergence(q, h);
        const ScalarField divdrv = divergence(drv, h);

        SkewField curl = curl_pair(q, h);
        double curl_mean = 0.0;
        SkewField sigma(g);
        for (std::size_t p = 0; p < curl.pair_count(); ++p) {
            const double* plane = curl.pair_plane(p);
            long double acc = 0.0L;
            for (std::size_t s = 0; s < g.cells(); ++s) acc += plane[s];
            const double m = static_cast<double>(acc / static_cast<long double>(g.cells()));
            curl_mean = std::max(curl_mean, std::abs(m));
            ScalarField rhs(g);
            for (std::size_t s = 0; s < g.cells(); ++s) rhs[s] = plane[s];
            ScalarField spair = solve_poisson(rhs, h);
            double* out = sigma.pair_plane(p);
            for (std::size_t s = 0; s < g.cells(); ++s) out[s] = spair[s];
        }

        VectorField divsig = skew_row_divergence(sigma, h);
        divsig -= q;

        lvl.phi.push_back(std::move(phi));
        lvl.q.push_back(std::move(q));
        lvl.sigma.push_back(std::move(sigma));
        lvl.abar.push_back(col);
        lvl.reports.push_back(rep);
        lvl.rhs_div_norm.push_back(divdrv.l2());
        lvl.div_q_norm.push_back(divq.l2());
        lvl.q_mean_abs.push_back(qmean_abs);
        lvl.curl_mean_abs.push_back(curl_mean);
        lvl.sigma_gap_norm.push_back(divsig.l2());
        lvl.sigma_gap_bound.push_back(divq.l2() / gap);
    }
    return lvl;
}

// builds levels 1..n_max inductively; per-sample abar throughout, so mean q = 0
// holds sample by sample. dual = true runs the same recursion against the
// pointwise transpose of a.
inline CorrectorSet build_hierarchy(const CoefficientField& a, int n_max, double tol, bool dual = false) {
    if (n_max < 1) throw std::invalid_argument("build_hierarchy: n_max must be >= 1");
    CorrectorSet set;
    set.grid = a.grid();
    set.spacing = a.grid().h();
    set.dual = dual;
    set.stationary_order = (a.grid().dim() + 1) / 2;
    if (dual) {
        const CoefficientField at = a.adjoint();
        for (int n = 1; n <= n_max; ++n) set.levels.push_back(build_corrector_level(at, set, n, tol));
    } else {
        for (int n = 1; n <= n_max; ++n) set.levels.push_back(build_corrector_level(a, set, n, tol));
    }
    return set;
}

// max over free indices of |Sym_{i1..in}(e_j . abar^n e_{i_n})
//   - (-1)^{n+1} Sym_{i1..in}(e_{i_n} . abar^{*,n}_{j i1..i_{n-2}} e_{i_{n-1}})|
inline double symmetry_identity_residual(const CorrectorSet& primal, const CorrectorSet& dual, int n) {
    const int d = primal.grid.dim();
    if (dual.grid != primal.grid) throw std::invalid_argument("symmetry_identity_residual: grid mismatch");
    const double sign = (n % 2 == 0) ? -1.0 : 1.0;
    double worst = 0.0;
    const auto tuples = enumerate_tuples(d, n);
    for (int j = 0; j < d; ++j) {
        for (const IndexTuple& t : tuples) {
            const double lhs = symmetrize_over(t, [&](const IndexTuple& s) {
                return primal.abar_entry(n, j, s);
            });
            const double rhs = sign * symmetrize_over(t, [&](const IndexTuple& s) {
                // dual tuple (j, i1..i_{n-1}) with vector component i_n
                IndexTuple dt;
                dt.reserve(static_cast<std::size_t>(n));
                dt.push_back(j);
                for (std::size_t k = 0; k + 1 < s.size(); ++k) dt.push_back(s[k]);
                return dual.abar_entry(n, s.back(), dt);
            });
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

// Sym_{i1..i_{n+1}}(e_{i_{n+1}} . abar^n_{i1..i_{n-1}} e_{i_n}); vanishes under
// refinement for symmetric a and even n
inline double even_order_symmetrized_max(const CorrectorSet& set, int n) {
    const int d = set.grid.dim();
    double worst = 0.0;
    for (const IndexTuple& t : enumerate_tuples(d, n + 1)) {
        const double v = symmetrize_over(t, [&](const IndexTuple& s) {
            IndexTuple base(s.begin(), s.end() - 1);
            return set.abar_entry(n, s.back(), base);
        });
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

} // namespace homoglab
