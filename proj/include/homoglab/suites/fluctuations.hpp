#pragma once

#include <array>
#include <string>
#include <vector>

#include "homoglab/io/persist.hpp"
#include "homoglab/lab/ensemble.hpp"
#include "homoglab/lab/observables.hpp"
#include "homoglab/stats/moments.hpp"
#include "homoglab/suites/common.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// Pathwise fluctuation transfer: the commutator of the heterogeneous solution
// and the standard commutator of the homogenized profile share their leading
// fluctuations, so the variance of the gap shrinks relative to the variance
// of the carrier as the scales separate.

inline SuiteResult run_fluctuation_suite(const SuiteOptions& opts = {}) {
    Stopwatch watch;
    SuiteResult result;
    result.name = "fluctuations";

    struct Level {
        int n;
        double side;
    };
    const std::array<Level, 3> levels{{{64, 8.0}, {128, 16.0}, {256, 32.0}}};

    CoefficientMapSpec map_template;
    map_template.d = 2;

    const FourierVectorPoly fprobe = default_vector_probe(2, 0);
    const FourierVectorPoly gprobe = default_vector_probe(2, 1);

    std::vector<std::uint64_t> calib_seeds, eval_seeds;
    for (std::uint64_t s = 0; s < 32; ++s) calib_seeds.push_back(opts.seed0 + s);
    for (std::uint64_t s = 0; s < 100; ++s) eval_seeds.push_back(opts.seed0 + 500 + s);

    std::vector<double> eps_list, gap_var, carrier_var, ratios;
    for (const Level& lv : levels) {
        const TorusGrid grid(2, lv.n, lv.side);
        LabContext ctx;
        ctx.grid = &grid;
        ctx.kernel = default_bump_kernel(2, grid.h());
        ctx.map = map_template;
        attach_field_cache(ctx);

        const LabCalibration cal = calibrate_lab(ctx, 1, calib_seeds, opts.threads);

        ObservableSpec spec(2);
        spec.kind = ObservableKind::pathwise_gap;
        spec.order = 1;
        spec.f = fprobe;
        spec.g = gprobe;
        const EnsembleResult r =
            run_ensemble(spec, ctx, eval_seeds, &cal, opts.threads, opts.config_hash);

        const MomentStats gap = moment_stats(r.ok_values());
        const MomentStats carrier = moment_stats(r.ok_references());
        eps_list.push_back(grid.eps());
        gap_var.push_back(gap.variance);
        carrier_var.push_back(carrier.variance);
        ratios.push_back(carrier.variance > 0.0 ? gap.variance / carrier.variance : 0.0);

        if (!opts.out_dir.empty())
            save_ensemble(opts.out_dir, "pathwise_gap_eps" + std::to_string(static_cast<int>(lv.side)), r);
    }

    for (std::size_t i = 0; i + 1 < ratios.size(); ++i) {
        const double shrink = ratios[i + 1] > 0.0 ? ratios[i] / ratios[i + 1] : 0.0;
        result.checks.push_back(check_ge(
            7,
            "pathwise variance ratio shrink, eps 1/" +
                std::to_string(static_cast<int>(levels[i].side)) + " -> 1/" +
                std::to_string(static_cast<int>(levels[i + 1].side)),
            shrink, 1.5,
            "ratios " + detail::short_num(ratios[i]) + " -> " + detail::short_num(ratios[i + 1])));
    }

    if (!opts.out_dir.empty()) {
        CsvWriter csv(opts.out_dir + "/pathwise_ratio.csv",
                      {"eps", "gap_variance", "carrier_variance", "ratio"});
        for (std::size_t i = 0; i < eps_list.size(); ++i)
            csv.row({CsvWriter::num(eps_list[i]), CsvWriter::num(gap_var[i]),
                     CsvWriter::num(carrier_var[i]), CsvWriter::num(ratios[i])});
        csv.done();
    }

    result.elapsed_seconds = watch.seconds();
    return result;
}

} // namespace homoglab
