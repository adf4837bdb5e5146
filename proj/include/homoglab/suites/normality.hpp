#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "homoglab/commutators/standard.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/io/persist.hpp"
#include "homoglab/lab/ensemble.hpp"
#include "homoglab/lab/observables.hpp"
#include "homoglab/stats/moments.hpp"
#include "homoglab/stats/normality.hpp"
#include "homoglab/stats/qestimate.hpp"
#include "homoglab/suites/common.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// Distributional behaviour of the standard commutator at the smallest scale
// separation: Gaussianity of one observable, then the leading covariance
// tensor fit across a family of probes sharing the same per-seed hierarchies.

inline SuiteResult run_normality_suite(const SuiteOptions& opts = {}) {
    Stopwatch watch;
    SuiteResult result;
    result.name = "normality";

    const TorusGrid grid(2, 256, 32.0);
    const double eps = grid.eps();
    LabContext ctx;
    ctx.grid = &grid;
    ctx.kernel = default_bump_kernel(2, grid.h());
    ctx.map.d = 2;
    attach_field_cache(ctx);

    std::vector<std::uint64_t> calib_seeds;
    for (std::uint64_t s = 0; s < 40; ++s) calib_seeds.push_back(opts.seed0 + s);
    const LabCalibration cal = calibrate_lab(ctx, 1, calib_seeds, opts.threads);

    const int probe_count = 12;
    std::vector<QProbe> probes = default_q_probes(2, probe_count);
    std::vector<VectorField> g_sampled;
    g_sampled.reserve(probes.size());
    for (const QProbe& p : probes) g_sampled.push_back(p.g.sample(grid));

    const std::size_t seed_count = 200;
    std::vector<std::vector<double>> values(probes.size(),
                                            std::vector<double>(seed_count, 0.0));
    std::vector<std::string> errors(seed_count);
    detail::run_indexed(opts.threads, seed_count, [&](std::size_t i) {
        try {
            const std::uint64_t seed = opts.seed0 + 1000 + i;
            const CoefficientField a = ctx.sample(seed);
            const CorrectorSet set = build_hierarchy(a, 1, ctx.hierarchy_tol);
            for (std::size_t p = 0; p < probes.size(); ++p) {
                const VectorField xo =
                    standard_commutator_explicit(a, set, cal.primal.mean, probes[p].w, 1, eps);
                values[p][i] = average_dot(g_sampled[p], xo);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < seed_count; ++i)
        if (!errors[i].empty())
            throw solver_error("normality seed " + std::to_string(opts.seed0 + 1000 + i) + ": " +
                               errors[i]);

    // Criterion 8: the first probe's standardized observable.
    {
        const NormalityMetrics m = normality_metrics(values[0]);
        result.checks.push_back(
            check_le(8, "Kolmogorov-Smirnov distance", m.ks, 0.12, "eps=1/32, 200 seeds"));
        result.checks.push_back(check_band(8, "skewness", m.skewness, -0.35, 0.35,
                                           "stderr " + detail::short_num(m.skewness_stderr)));
        result.checks.push_back(check_band(8, "excess kurtosis", m.excess_kurtosis, -0.8, 0.8,
                                           "stderr " + detail::short_num(m.kurtosis_stderr)));
        if (!opts.out_dir.empty()) {
            save_qq_csv(opts.out_dir, "normality_qq", values[0]);
            write_json_file(opts.out_dir + "/normality_metrics.json",
                            Json{{"ks", m.ks},
                                 {"w2", m.w2},
                                 {"skewness", m.skewness},
                                 {"skewness_stderr", m.skewness_stderr},
                                 {"excess_kurtosis", m.excess_kurtosis},
                                 {"kurtosis_stderr", m.kurtosis_stderr},
                                 {"samples", m.samples}});
        }
    }

    // Criterion 9: fit the leading covariance tensor, predict held-out probes.
    {
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const MomentStats ms = moment_stats(values[p]);
            probes[p].variance = ms.variance;
            probes[p].variance_stderr = ms.variance_stderr;
        }
        const QEstimate est = estimate_Q_leading(probes, grid);
        const double q0000 = est.entry(0, 0, 0, 0) / std::pow(eps, 2);
        result.checks.push_back(check_le(
            9, "held-out probe variance prediction", est.cv_gap, 3.0,
            "Q0000 = " + detail::short_num(q0000) + ", cond = " + detail::short_num(est.condition_number)));
        if (!opts.out_dir.empty()) {
            Json probes_json = Json::array();
            for (const QProbe& p : probes)
                probes_json.push_back(
                    Json{{"variance", p.variance}, {"variance_stderr", p.variance_stderr}});
            write_json_file(opts.out_dir + "/q_estimate.json",
                            Json{{"q0000", q0000},
                                 {"eps", eps},
                                 {"fit_residual", est.fit_residual},
                                 {"cv_gap", est.cv_gap},
                                 {"condition_number", est.condition_number},
                                 {"probes", probes_json}});
        }
    }

    result.elapsed_seconds = watch.seconds();
    return result;
}

} // namespace homoglab
