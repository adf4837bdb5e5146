#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/io/persist.hpp"
#include "homoglab/lab/ensemble.hpp"
#include "homoglab/lab/observables.hpp"
#include "homoglab/stats/moments.hpp"
#include "homoglab/stats/scaling.hpp"
#include "homoglab/suites/common.hpp"
#include "homoglab/twoscale/cascade.hpp"
#include "homoglab/twoscale/expansion.hpp"
#include "homoglab/twoscale/heterogeneous.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// Scale separation sweep at fixed lattice resolution per correlation length:
// epsilon in {1/8, 1/16, 1/32} realized as (N, L) in {(64,8), (128,16),
// (256,32)}. Criterion 5 fits the two-scale expansion error in epsilon;
// criterion 6 fits the variance of macroscopic observables.

inline SuiteResult run_scaling_suite(const SuiteOptions& opts = {}) {
    Stopwatch watch;
    SuiteResult result;
    result.name = "scaling";

    struct Level {
        int n;
        double side;
    };
    const std::array<Level, 3> levels{{{64, 8.0}, {128, 16.0}, {256, 32.0}}};
    std::vector<double> eps_list;
    for (const Level& lv : levels) eps_list.push_back(1.0 / lv.side);

    CoefficientMapSpec map_template;
    map_template.d = 2;

    const FourierPoly w = default_scalar_probe(2, 0);
    const FourierVectorPoly fprobe = default_vector_probe(2, 0);
    const FourierVectorPoly gprobe = default_vector_probe(2, 1);

    // Criterion 5: expansion accuracy, 50 seeds per epsilon.
    {
        std::vector<double> means, stderrs;
        const std::size_t seed_count = 50;
        for (const Level& lv : levels) {
            const TorusGrid grid(2, lv.n, lv.side);
            LabContext ctx;
            ctx.grid = &grid;
            ctx.kernel = default_bump_kernel(2, grid.h());
            ctx.map = map_template;
            attach_field_cache(ctx);
            const double eps = grid.eps();

            std::vector<double> errs(seed_count, 0.0);
            std::vector<std::string> errors(seed_count);
            detail::run_indexed(opts.threads, seed_count, [&](std::size_t i) {
                try {
                    const CoefficientField a = ctx.sample(opts.seed0 + 200 + i);
                    const CorrectorSet set = build_hierarchy(a, 1, 1e-9);
                    const AbarTensors t = AbarTensors::from_correctors(set);
                    const CascadeSolution ubar = homogenized_cascade(t, fprobe, 1, grid, eps);
                    const HeterogeneousSolution sol = solve_heterogeneous(a, fprobe, 1e-9);
                    errs[i] = expansion_error_norm(sol.grad, set, ubar.assembled, 1, eps);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            });
            for (std::size_t i = 0; i < seed_count; ++i)
                if (!errors[i].empty())
                    throw solver_error("expansion sweep seed " +
                                       std::to_string(opts.seed0 + 200 + i) + " at eps=1/" +
                                       std::to_string(lv.n / 8) + ": " + errors[i]);

            double mean = 0.0;
            for (const double e : errs) mean += e;
            mean /= static_cast<double>(seed_count);
            double var = 0.0;
            for (const double e : errs) var += (e - mean) * (e - mean);
            var /= static_cast<double>(seed_count - 1);
            means.push_back(mean);
            stderrs.push_back(std::sqrt(var / static_cast<double>(seed_count)));
        }

        const PowerLawFit fit = scaling_fit(eps_list, means, stderrs);
        result.checks.push_back(check_band(5, "two-scale expansion error slope", fit.slope, 0.7, 1.3,
                                           "slope stderr " + detail::short_num(fit.slope_stderr)));
        if (!opts.out_dir.empty())
            save_rate_fit(opts.out_dir, "expansion_error", eps_list, means, stderrs, &fit);
    }

    // Criterion 6: CLT variance scaling for two observables, 100 seeds each.
    {
        std::vector<std::uint64_t> calib_seeds, eval_seeds;
        for (std::uint64_t s = 0; s < 32; ++s) calib_seeds.push_back(opts.seed0 + s);
        for (std::uint64_t s = 0; s < 100; ++s) eval_seeds.push_back(opts.seed0 + 300 + s);

        std::vector<double> var_field, var_field_err, var_xo, var_xo_err;
        for (const Level& lv : levels) {
            const TorusGrid grid(2, lv.n, lv.side);
            LabContext ctx;
            ctx.grid = &grid;
            ctx.kernel = default_bump_kernel(2, grid.h());
            ctx.map = map_template;
            attach_field_cache(ctx);

            const LabCalibration cal = calibrate_lab(ctx, 1, calib_seeds, opts.threads);

            ObservableSpec field_avg(2);
            field_avg.kind = ObservableKind::field_average;
            field_avg.f = fprobe;
            field_avg.g = gprobe;
            const EnsembleResult ra =
                run_ensemble(field_avg, ctx, eval_seeds, nullptr, opts.threads, opts.config_hash);
            const MomentStats ma = moment_stats(ra.ok_values());
            var_field.push_back(ma.variance);
            var_field_err.push_back(ma.variance_stderr);

            ObservableSpec xo(2);
            xo.kind = ObservableKind::standard_commutator;
            xo.order = 1;
            xo.w = w;
            xo.g = gprobe;
            const EnsembleResult rb =
                run_ensemble(xo, ctx, eval_seeds, &cal, opts.threads, opts.config_hash);
            const MomentStats mb = moment_stats(rb.ok_values());
            var_xo.push_back(mb.variance);
            var_xo_err.push_back(mb.variance_stderr);

            if (!opts.out_dir.empty()) {
                const std::string tag = "_eps" + std::to_string(static_cast<int>(lv.side));
                save_ensemble(opts.out_dir, "clt_field_average" + tag, ra);
                save_ensemble(opts.out_dir, "clt_standard_commutator" + tag, rb);
            }
        }

        const PowerLawFit fit_field = scaling_fit(eps_list, var_field, var_field_err);
        const PowerLawFit fit_xo = scaling_fit(eps_list, var_xo, var_xo_err);
        result.checks.push_back(
            check_band(6, "field-average variance slope", fit_field.slope, 1.7, 2.3,
                       "slope stderr " + detail::short_num(fit_field.slope_stderr)));
        result.checks.push_back(
            check_band(6, "standard-commutator variance slope", fit_xo.slope, 1.7, 2.3,
                       "slope stderr " + detail::short_num(fit_xo.slope_stderr)));
        if (!opts.out_dir.empty()) {
            save_rate_fit(opts.out_dir, "clt_field_average", eps_list, var_field, var_field_err,
                          &fit_field);
            save_rate_fit(opts.out_dir, "clt_standard_commutator", eps_list, var_xo, var_xo_err,
                          &fit_xo);
        }
    }

    result.elapsed_seconds = watch.seconds();
    return result;
}

} // namespace homoglab
