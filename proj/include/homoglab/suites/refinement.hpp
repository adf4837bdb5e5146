#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "homoglab/commutators/commutator.hpp"
#include "homoglab/commutators/identities.hpp"
#include "homoglab/commutators/standard.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/io/persist.hpp"
#include "homoglab/lab/ensemble.hpp"
#include "homoglab/random/white_noise.hpp"
#include "homoglab/suites/common.hpp"
#include "homoglab/twoscale/cascade.hpp"
#include "homoglab/twoscale/expansion.hpp"
#include "homoglab/twoscale/heterogeneous.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// Refinement-class identities: each residual carries a continuum product rule
// and shrinks with the lattice spacing. The noise is drawn once on the finest
// grid and block-averaged down, so all three resolutions see the same
// realization of the medium and the ratios are clean.

namespace detail {

struct RefinementSeries {
    std::string identity;
    int order = 0;
    std::array<double, 3> residual{0.0, 0.0, 0.0}; // coarse, middle, fine
};

} // namespace detail

inline SuiteResult run_refinement_suite(const SuiteOptions& opts = {}) {
    Stopwatch watch;
    SuiteResult result;
    result.name = "refinement";

    const double side = 8.0;
    const std::array<int, 3> sizes{32, 64, 128};
    const double tol = 1e-11;
    const double min_ratio = 1.5;

    std::vector<std::unique_ptr<TorusGrid>> grids;
    for (const int n : sizes) grids.push_back(std::make_unique<TorusGrid>(2, n, side));

    CoefficientMapSpec map;
    map.d = 2;

    // One realization, coarse-grained to every resolution.
    std::vector<WhiteNoiseSample> noises;
    noises.reserve(3);
    {
        WhiteNoiseSample fine = sample_white_noise(*grids[2], map.kappa, opts.seed0 + 40);
        WhiteNoiseSample mid = coarsen_white_noise(fine, *grids[1]);
        WhiteNoiseSample coarse = coarsen_white_noise(mid, *grids[0]);
        noises.push_back(std::move(coarse));
        noises.push_back(std::move(mid));
        noises.push_back(std::move(fine));
    }

    const FourierPoly w = default_scalar_probe(2, 0);
    const FourierPoly wprime = default_scalar_probe(2, 1);
    const FourierVectorPoly fprobe = default_vector_probe(2, 0);
    const FourierVectorPoly gprobe = default_vector_probe(2, 1);

    enum { kSym = 0, kHill1, kHill2, kIntertwine, kTaylor, kDuality2, kReduction2, kCount };
    std::array<detail::RefinementSeries, kCount> series;
    series[kSym] = {"symmetry", 2, {}};
    series[kHill1] = {"hill-mandel", 1, {}};
    series[kHill2] = {"hill-mandel", 2, {}};
    series[kIntertwine] = {"intertwining", 1, {}};
    series[kTaylor] = {"taylor-vs-explicit", 2, {}};
    series[kDuality2] = {"duality", 2, {}};
    series[kReduction2] = {"reduction", 2, {}};

    std::vector<std::string> errors(3);
    detail::run_indexed(std::min(opts.threads, 3), 3, [&](std::size_t level) {
        try {
            const TorusGrid& grid = *grids[level];
            const double eps = grid.eps();
            const KernelC0 kernel = default_bump_kernel(2, grid.h());
            const GaussianFieldSample field = build_gaussian_field(noises[level], kernel);
            const CoefficientField a = sample_coefficient_field(field, map);
            const CoefficientField a_star = a.adjoint();

            const CorrectorSet primal = build_hierarchy(a, 2, tol);
            const CorrectorSet dual = build_hierarchy(a, 2, tol, true);
            const AbarTensors pt = AbarTensors::from_correctors(primal);
            const AbarTensors dt = AbarTensors::from_correctors(dual);

            const VectorField f_sampled = fprobe.sample(grid);
            const VectorField g_sampled = gprobe.sample(grid);
            const HeterogeneousSolution sol = solve_heterogeneous(a, fprobe, tol);

            series[kSym].residual[level] = symmetry_identity_residual(primal, dual, 2);
            series[kHill1].residual[level] =
                hill_mandel_residual(a, pt, dual, sol.grad, f_sampled, 1, eps);
            series[kHill2].residual[level] =
                hill_mandel_residual(a, pt, dual, sol.grad, f_sampled, 2, eps);
            series[kIntertwine].residual[level] = intertwining_residual(a, primal, pt, w, 1, eps);

            {
                const VectorField expl = standard_commutator_explicit(a, primal, pt, w, 2, eps);
                const TaylorCommutatorSamples taylor =
                    standard_commutator_taylor(a, primal, pt, w, 2, eps, grid.n() / 8);
                series[kTaylor].residual[level] = max_pointwise_gap(taylor, expl);
            }

            series[kDuality2].residual[level] =
                duality_residual(a, a_star, pt, dt, w.sample(grid), wprime.sample(grid), 2, eps);

            {
                const VectorField xi2 = commutator(a, pt, sol.grad, 2, eps);
                const CascadeSolution vbar2 = homogenized_cascade(dt, gprobe, 2, grid, eps);
                series[kReduction2].residual[level] =
                    reduction_identity_residual(sol.grad, vbar2, xi2, f_sampled, g_sampled, dt, 2, eps)
                        .residual;
            }
        } catch (const std::exception& e) {
            errors[level] = e.what();
        }
    });
    for (std::size_t level = 0; level < 3; ++level)
        if (!errors[level].empty())
            throw solver_error("refinement level N=" + std::to_string(sizes[level]) + ": " +
                               errors[level]);

    for (const auto& s : series) {
        const std::string label = s.identity + " n=" + std::to_string(s.order);
        const double r0 = s.residual[1] > 0.0 ? s.residual[0] / s.residual[1] : 0.0;
        const double r1 = s.residual[2] > 0.0 ? s.residual[1] / s.residual[2] : 0.0;
        result.checks.push_back(check_ge(4, label + ", ratio 32/64", r0, min_ratio,
                                         "residuals " + detail::short_num(s.residual[0]) + " -> " +
                                             detail::short_num(s.residual[1])));
        result.checks.push_back(check_ge(4, label + ", ratio 64/128", r1, min_ratio,
                                         "residuals " + detail::short_num(s.residual[1]) + " -> " +
                                             detail::short_num(s.residual[2])));
    }

    if (!opts.out_dir.empty()) {
        CsvWriter csv(opts.out_dir + "/refinement_residuals.csv",
                      {"identity", "n", "grid_n", "h", "residual"});
        for (const auto& s : series)
            for (std::size_t level = 0; level < 3; ++level)
                csv.row({s.identity, std::to_string(s.order), std::to_string(sizes[level]),
                         CsvWriter::num(side / sizes[level]), CsvWriter::num(s.residual[level])});
        csv.done();
    }

    result.elapsed_seconds = watch.seconds();
    return result;
}

} // namespace homoglab
