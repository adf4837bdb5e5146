#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "homoglab/commutators/commutator.hpp"
#include "homoglab/commutators/identities.hpp"
#include "homoglab/commutators/standard.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/io/persist.hpp"
#include "homoglab/lab/ensemble.hpp"
#include "homoglab/lab/observables.hpp"
#include "homoglab/suites/common.hpp"
#include "homoglab/twoscale/cascade.hpp"
#include "homoglab/twoscale/expansion.hpp"
#include "homoglab/twoscale/heterogeneous.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// Exact-class identities: everything here closes at solver tolerance, so the
// bounds are tight and any regression in the discrete operator pairings shows
// up immediately.

namespace detail {

struct IdentityRow {
    std::uint64_t seed = 0;
    // residuals, all relative
    double corrector_eq = 0.0;
    double q_mean = 0.0;
    double sigma_div = 0.0;
    double link_algebraic = 0.0;
    double xi0 = 0.0;
    double duality1 = 0.0;
    double reduction1 = 0.0;
};

inline double field_l2(const VectorField& v) {
    const TorusGrid& g = v.grid();
    return std::sqrt(average_sqnorm(v) * std::pow(g.side(), g.dim()));
}

inline double hierarchy_equation_residual(const CorrectorSet& set) {
    double worst = 0.0;
    for (int n = 1; n <= set.max_order(); ++n) {
        const CorrectorLevel& lev = set.level(n);
        for (std::size_t t = 0; t < lev.tuples.size(); ++t) {
            worst = std::max(worst, lev.reports[t].rel_residual);
            if (lev.rhs_div_norm[t] > 0.0)
                worst = std::max(worst, lev.div_q_norm[t] / lev.rhs_div_norm[t]);
        }
    }
    return worst;
}

inline double hierarchy_q_mean_residual(const CorrectorSet& set) {
    double worst = 0.0;
    for (int n = 1; n <= set.max_order(); ++n) {
        const CorrectorLevel& lev = set.level(n);
        for (std::size_t t = 0; t < lev.tuples.size(); ++t) {
            const double scale = std::max(1e-30, std::sqrt(average_sqnorm(lev.q[t])));
            worst = std::max(worst, lev.q_mean_abs[t] / scale);
        }
    }
    return worst;
}

inline double hierarchy_sigma_residual(const CorrectorSet& set) {
    double worst = 0.0;
    for (int n = 1; n <= set.max_order(); ++n) {
        const CorrectorLevel& lev = set.level(n);
        for (std::size_t t = 0; t < lev.tuples.size(); ++t) {
            const double scale = std::max(1e-30, field_l2(lev.q[t]));
            worst = std::max(worst, lev.sigma_gap_norm[t] / scale);
        }
    }
    return worst;
}

} // namespace detail

inline SuiteResult run_identity_suite(const SuiteOptions& opts = {}) {
    Stopwatch watch;
    SuiteResult result;
    result.name = "identities";

    // Criterion 1: d=2, N=64, two corrector levels, five seeds.
    {
        const TorusGrid grid(2, 64, 8.0);
        const double eps = grid.eps();
        const double tol = 1e-10;
        const double bound = 1e-8;
        CoefficientMapSpec map;
        map.d = 2;

        LabContext ctx;
        ctx.grid = &grid;
        ctx.kernel = default_bump_kernel(2, grid.h());
        ctx.map = map;

        const FourierPoly w = default_scalar_probe(2, 0);
        const FourierPoly wprime = default_scalar_probe(2, 1);
        const FourierVectorPoly fprobe = default_vector_probe(2, 0);
        const FourierVectorPoly gprobe = default_vector_probe(2, 1);
        const VectorField f_sampled = fprobe.sample(grid);
        const VectorField g_sampled = gprobe.sample(grid);

        const std::size_t seed_count = 5;
        std::vector<detail::IdentityRow> rows(seed_count);
        std::vector<std::string> errors(seed_count);
        detail::run_indexed(opts.threads, seed_count, [&](std::size_t i) {
            try {
                const std::uint64_t seed = opts.seed0 + i;
                const CoefficientField a = ctx.sample(seed);
                const CoefficientField a_star = a.adjoint();
                const CorrectorSet primal = build_hierarchy(a, 2, tol);
                const CorrectorSet dual = build_hierarchy(a, 2, tol, true);
                const AbarTensors pt = AbarTensors::from_correctors(primal);
                const AbarTensors dt = AbarTensors::from_correctors(dual);

                detail::IdentityRow row;
                row.seed = seed;
                row.corrector_eq = std::max(detail::hierarchy_equation_residual(primal),
                                            detail::hierarchy_equation_residual(dual));
                row.q_mean = std::max(detail::hierarchy_q_mean_residual(primal),
                                      detail::hierarchy_q_mean_residual(dual));
                row.sigma_div = std::max(detail::hierarchy_sigma_residual(primal),
                                         detail::hierarchy_sigma_residual(dual));
                row.link_algebraic = std::max(link_identity(primal, w, 1, eps).algebraic_rel,
                                              link_identity(primal, w, 2, eps).algebraic_rel);

                {
                    const VectorField gw = gradient(w.sample(grid), 1.0 / grid.n());
                    const VectorField xi0 = commutator(a, pt, gw, 0, eps);
                    const VectorField flux = apply_flux(a, gw);
                    double gap = 0.0, scale = 0.0;
                    for (int k = 0; k < grid.dim(); ++k)
                        for (std::size_t s = 0; s < grid.cells(); ++s) {
                            gap = std::max(gap, std::abs(xi0.at(k, s) - flux.at(k, s)));
                            scale = std::max(scale, std::abs(flux.at(k, s)));
                        }
                    row.xi0 = scale > 0.0 ? gap / scale : gap;
                }

                {
                    const ScalarField ws = w.sample(grid);
                    const ScalarField wps = wprime.sample(grid);
                    row.duality1 = duality_residual(a, a_star, pt, dt, ws, wps, 1, eps);
                }

                {
                    const HeterogeneousSolution sol = solve_heterogeneous(a, fprobe, tol);
                    const VectorField xi = commutator(a, pt, sol.grad, 1, eps);
                    const CascadeSolution vbar = homogenized_cascade(dt, gprobe, 1, grid, eps);
                    row.reduction1 =
                        reduction_identity_residual(sol.grad, vbar, xi, f_sampled, g_sampled, dt, 1, eps)
                            .residual;
                }
                rows[i] = row;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        });
        for (std::size_t i = 0; i < seed_count; ++i)
            if (!errors[i].empty())
                throw solver_error("identity suite seed " + std::to_string(opts.seed0 + i) +
                                   ": " + errors[i]);

        detail::IdentityRow worst;
        for (const detail::IdentityRow& r : rows) {
            worst.corrector_eq = std::max(worst.corrector_eq, r.corrector_eq);
            worst.q_mean = std::max(worst.q_mean, r.q_mean);
            worst.sigma_div = std::max(worst.sigma_div, r.sigma_div);
            worst.link_algebraic = std::max(worst.link_algebraic, r.link_algebraic);
            worst.xi0 = std::max(worst.xi0, r.xi0);
            worst.duality1 = std::max(worst.duality1, r.duality1);
            worst.reduction1 = std::max(worst.reduction1, r.reduction1);
        }

        const std::string detail_txt = "d=2, N=64, n<=2, 5 seeds";
        result.checks.push_back(check_le(1, "corrector equation residual", worst.corrector_eq, bound, detail_txt));
        result.checks.push_back(check_le(1, "flux mean", worst.q_mean, bound, detail_txt));
        result.checks.push_back(check_le(1, "sigma divergence gap", worst.sigma_div, bound, detail_txt));
        result.checks.push_back(check_le(1, "link identity, algebraic part", worst.link_algebraic, bound, detail_txt));
        result.checks.push_back(check_le(1, "order-0 commutator is the flux", worst.xi0, bound, detail_txt));
        result.checks.push_back(check_le(1, "first-order duality", worst.duality1, bound, detail_txt));
        result.checks.push_back(check_le(1, "first-order reduction", worst.reduction1, bound, detail_txt));

        if (!opts.out_dir.empty()) {
            CsvWriter csv(opts.out_dir + "/identity_residuals.csv",
                          {"identity", "n", "grid_n", "seed", "residual"});
            for (const detail::IdentityRow& r : rows) {
                const std::string seed = std::to_string(r.seed);
                csv.row({"corrector-equation", "2", "64", seed, CsvWriter::num(r.corrector_eq)});
                csv.row({"flux-mean", "2", "64", seed, CsvWriter::num(r.q_mean)});
                csv.row({"sigma-divergence", "2", "64", seed, CsvWriter::num(r.sigma_div)});
                csv.row({"link-algebraic", "2", "64", seed, CsvWriter::num(r.link_algebraic)});
                csv.row({"commutator-order0", "0", "64", seed, CsvWriter::num(r.xi0)});
                csv.row({"duality", "1", "64", seed, CsvWriter::num(r.duality1)});
                csv.row({"reduction", "1", "64", seed, CsvWriter::num(r.reduction1)});
            }
            csv.done();
        }
    }

    // Criterion 2: a = c Id kills every fluctuating object.
    {
        const TorusGrid grid(2, 32, 4.0);
        const double eps = grid.eps();
        const double c = 1.7;
        const double bound = 1e-10;
        const CoefficientField a =
            constant_coefficient_field(grid, Mat::scaled_identity(2, c), 1.0);
        const CorrectorSet set = build_hierarchy(a, 2, 1e-12);
        const AbarTensors t = AbarTensors::from_correctors(set);

        double phi_max = 0.0, q_max = 0.0, sigma_max = 0.0;
        for (int n = 1; n <= 2; ++n) {
            const CorrectorLevel& lev = set.level(n);
            for (std::size_t ti = 0; ti < lev.tuples.size(); ++ti) {
                phi_max = std::max(phi_max, lev.phi[ti].max_abs());
                for (int k = 0; k < 2; ++k)
                    for (std::size_t s = 0; s < grid.cells(); ++s)
                        q_max = std::max(q_max, std::abs(lev.q[ti].at(k, s)));
                sigma_max = std::max(sigma_max, lev.sigma[ti].max_abs());
            }
        }
        result.checks.push_back(check_le(2, "constant a: correctors vanish", phi_max, bound));
        result.checks.push_back(check_le(2, "constant a: fluxes vanish", q_max, bound));
        result.checks.push_back(check_le(2, "constant a: sigma vanishes", sigma_max, bound));

        double abar_gap = 0.0;
        const Mat a1 = t.order1();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                abar_gap = std::max(abar_gap, std::abs(a1(i, j) - (i == j ? c : 0.0)));
        result.checks.push_back(check_le(2, "constant a: abar1 = c Id", abar_gap, 1e-12));

        double abar2 = 0.0;
        for (const auto& row : t.entries[1])
            for (int j = 0; j < 2; ++j) abar2 = std::max(abar2, std::abs(row[static_cast<std::size_t>(j)]));
        result.checks.push_back(check_le(2, "constant a: abar2 = 0", abar2, 1e-12));

        const FourierPoly w = default_scalar_probe(2, 0);
        const VectorField gw = gradient(w.sample(grid), 1.0 / grid.n());
        double flux_scale = 0.0;
        {
            const VectorField flux = apply_flux(a, gw);
            for (int k = 0; k < 2; ++k)
                for (std::size_t s = 0; s < grid.cells(); ++s)
                    flux_scale = std::max(flux_scale, std::abs(flux.at(k, s)));
        }
        double xi_max = 0.0;
        {
            const VectorField xi = commutator(a, t, gw, 1, eps);
            for (int k = 0; k < 2; ++k)
                for (std::size_t s = 0; s < grid.cells(); ++s)
                    xi_max = std::max(xi_max, std::abs(xi.at(k, s)));
        }
        result.checks.push_back(check_le(2, "constant a: commutator vanishes", xi_max / flux_scale, bound));

        double xo_max = 0.0;
        for (int n = 1; n <= 2; ++n) {
            const VectorField xo = standard_commutator_explicit(a, set, t, w, n, eps);
            for (int k = 0; k < 2; ++k)
                for (std::size_t s = 0; s < grid.cells(); ++s)
                    xo_max = std::max(xo_max, std::abs(xo.at(k, s)));
        }
        result.checks.push_back(check_le(2, "constant a: standard commutator vanishes", xo_max / flux_scale, bound));

        const FourierVectorPoly f = default_vector_probe(2, 0);
        const CascadeSolution two = homogenized_cascade(t, f, 2, grid, eps);
        const CascadeSolution one = homogenized_cascade(t, f, 1, grid, eps);
        const ScalarField s2 = two.assembled.sample(grid);
        const ScalarField s1 = one.assembled.sample(grid);
        double cascade_gap = 0.0, cascade_scale = 0.0;
        for (std::size_t s = 0; s < grid.cells(); ++s) {
            cascade_gap = std::max(cascade_gap, std::abs(s2[s] - s1[s]));
            cascade_scale = std::max(cascade_scale, std::abs(s1[s]));
        }
        result.checks.push_back(
            check_le(2, "constant a: higher cascade orders collapse", cascade_gap / cascade_scale, bound));
    }

    // Criterion 3: the 1-D corrector in closed form.
    {
        const TorusGrid grid(1, 64, 8.0);
        CoefficientMapSpec map;
        map.d = 1;
        LabContext ctx;
        ctx.grid = &grid;
        ctx.kernel = default_bump_kernel(1, grid.h());
        ctx.map = map;

        const std::size_t seed_count = 20;
        std::vector<double> abar_gap(seed_count, 0.0), grad_gap(seed_count, 0.0);
        std::vector<std::string> errors(seed_count);
        detail::run_indexed(opts.threads, seed_count, [&](std::size_t i) {
            try {
                const CoefficientField a = ctx.sample(opts.seed0 + 100 + i);
                const CorrectorSet set = build_hierarchy(a, 1, 1e-12);

                long double inv_sum = 0.0L;
                for (std::size_t s = 0; s < grid.cells(); ++s)
                    inv_sum += 1.0L / static_cast<long double>(a.at(s)(0, 0));
                const double harmonic =
                    static_cast<double>(static_cast<long double>(grid.cells()) / inv_sum);

                const double abar = set.abar_entry(1, 0, IndexTuple{0});
                abar_gap[i] = std::abs(abar - harmonic);

                const VectorField grad = gradient(set.level(1).phi[0], grid.h());
                for (std::size_t s = 0; s < grid.cells(); ++s) {
                    const double closed = harmonic / a.at(s)(0, 0) - 1.0;
                    grad_gap[i] = std::max(grad_gap[i], std::abs(grad.at(0, s) - closed));
                }
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        });
        for (std::size_t i = 0; i < seed_count; ++i)
            if (!errors[i].empty())
                throw solver_error("1-D oracle seed " + std::to_string(opts.seed0 + 100 + i) +
                                   ": " + errors[i]);

        double worst_abar = 0.0, worst_grad = 0.0;
        for (std::size_t i = 0; i < seed_count; ++i) {
            worst_abar = std::max(worst_abar, abar_gap[i]);
            worst_grad = std::max(worst_grad, grad_gap[i]);
        }
        result.checks.push_back(
            check_le(3, "1-D abar1 equals the harmonic mean", worst_abar, 1e-12, "N=64, 20 seeds"));
        result.checks.push_back(
            check_le(3, "1-D corrector gradient closed form", worst_grad, 1e-10, "N=64, 20 seeds"));
    }

    result.elapsed_seconds = watch.seconds();
    return result;
}

} // namespace homoglab
