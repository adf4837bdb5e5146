#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "homoglab/io/persist.hpp"
#include "homoglab/lab/malliavin.hpp"
#include "homoglab/random/coefficient.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"
#include "homoglab/suites/common.hpp"
#include "homoglab/twoscale/heterogeneous.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// Noise-sensitivity calculus: the finite-difference Malliavin derivative of
// the coefficient map converges at first order in the step, and the
// spectral-gap inequality holds for a solver observable while saturating
// exactly for a linear functional of the field.

inline SuiteResult run_sensitivity_suite(const SuiteOptions& opts = {}) {
    Stopwatch watch;
    SuiteResult result;
    result.name = "sensitivity";

    CoefficientMapSpec map;
    map.d = 2;

    // Part one: chain-rule derivative versus finite differences, one site.
    std::vector<double> deltas{1e-3, 5e-4, 2.5e-4, 1.25e-4};
    std::vector<double> gaps;
    {
        const TorusGrid grid(2, 32, 8.0);
        const KernelC0 kernel = default_bump_kernel(2, grid.h());
        const WhiteNoiseSample noise = sample_white_noise(grid, 1, opts.seed0 + 900);
        const std::size_t z = (grid.cells() * 3) / 7;
        for (double delta : deltas)
            gaps.push_back(malliavin_fd_check(noise, kernel, map, z, 0, delta));

        double worst_slope = 0.0, worst_halving = 0.0;
        for (std::size_t i = 0; i < gaps.size(); ++i)
            worst_slope = std::max(worst_slope, gaps[i] / deltas[i]);
        for (std::size_t i = 0; i + 1 < gaps.size(); ++i)
            worst_halving = std::max(worst_halving, gaps[i + 1] / std::max(gaps[i], 1e-300));
        result.checks.push_back(check_le(10, "derivative gap linear in the step", worst_slope, 1.0,
                                         "sup over steps of gap/step"));
        result.checks.push_back(check_le(10, "derivative gap halves with the step", worst_halving,
                                         0.7, "worst consecutive ratio"));
        if (!opts.out_dir.empty()) {
            CsvWriter csv(opts.out_dir + "/malliavin_gap.csv", {"delta", "gap"});
            for (std::size_t i = 0; i < gaps.size(); ++i)
                csv.row({csv.num(deltas[i]), csv.num(gaps[i])});
            csv.done();
        }
    }

    // Part two: Var[X] <= E ||DX||^2 for the averaged flux of a solve.
    PoincareReport field_rep;
    {
        const TorusGrid grid(2, 32, 8.0);
        const KernelC0 kernel = default_bump_kernel(2, grid.h());
        const FourierVectorPoly fprobe = default_vector_probe(2, 0);
        const FourierVectorPoly gprobe = default_vector_probe(2, 1);
        const VectorField g_sampled = gprobe.sample(grid);
        const auto observable = [&](const GaussianFieldSample& field) {
            const CoefficientField a = sample_coefficient_field(field, map);
            const HeterogeneousSolution sol = solve_heterogeneous(a, fprobe, 1e-8);
            return average_dot(g_sampled, sol.grad);
        };
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t s = 0; s < 100; ++s) seeds.push_back(opts.seed0 + 950 + s);
        PoincareOptions popt;
        popt.stride = 4;
        field_rep = poincare_check(grid, kernel, 1, observable, seeds, popt, nullptr, opts.threads);
        result.checks.push_back(check_le(
            10, "spectral gap ratio, field average", field_rep.ratio, 1.2,
            "variance " + detail::short_num(field_rep.variance) + ", bound " +
                detail::short_num(field_rep.gradient_bound)));
    }

    // Part three: a linear functional of the field saturates the inequality,
    // with the variance computed in closed form from the kernel weights.
    PoincareReport linear_rep;
    {
        const TorusGrid grid(2, 16, 8.0);
        const KernelC0 kernel = default_bump_kernel(2, grid.h());
        const ScalarField weights = default_scalar_probe(2, 0).sample(grid);
        const auto observable = [&](const GaussianFieldSample& field) {
            long double acc = 0.0L;
            for (std::size_t s = 0; s < grid.cells(); ++s)
                acc += static_cast<long double>(weights[s]) * field.at(0, s);
            return static_cast<double>(acc / static_cast<long double>(grid.cells()));
        };

        const double vol = kernel.cell_volume();
        long double var = 0.0L;
        for (std::size_t z = 0; z < grid.cells(); ++z) {
            const auto zc = grid.coords(z);
            for (int c = 0; c < kernel.kappa; ++c) {
                long double w = 0.0L;
                for (std::size_t t = 0; t < kernel.offsets.size(); ++t) {
                    const auto& o = kernel.offsets[t];
                    const std::size_t x = grid.index({zc[0] + o[0], zc[1] + o[1], zc[2] + o[2]});
                    w += static_cast<long double>(weights[x]) * kernel.entry(t, 0, c) * vol;
                }
                w /= static_cast<long double>(grid.cells());
                var += w * w / static_cast<long double>(vol);
            }
        }
        const double analytic_variance = static_cast<double>(var);

        PoincareOptions popt;
        popt.stride = 1;
        popt.delta = 1e-3;
        const std::vector<std::uint64_t> seeds{opts.seed0 + 990, opts.seed0 + 991};
        linear_rep =
            poincare_check(grid, kernel, 1, observable, seeds, popt, &analytic_variance, opts.threads);
        result.checks.push_back(check_band(10, "spectral gap ratio, linear functional",
                                           linear_rep.ratio, 1.0 - 1e-6, 1.0 + 1e-6,
                                           "closed-form variance " + detail::short_num(analytic_variance)));
    }

    if (!opts.out_dir.empty()) {
        const auto report_json = [](const PoincareReport& r) {
            return Json{{"variance", r.variance},
                        {"variance_stderr", r.variance_stderr},
                        {"gradient_bound", r.gradient_bound},
                        {"gradient_stderr", r.gradient_stderr},
                        {"ratio", r.ratio},
                        {"sites_per_seed", r.sites_per_seed},
                        {"seeds_used", r.seeds_used}};
        };
        write_json_file(opts.out_dir + "/sensitivity.json",
                        Json{{"malliavin", Json{{"deltas", deltas}, {"gaps", gaps}}},
                             {"poincare_field_average", report_json(field_rep)},
                             {"poincare_linear", report_json(linear_rep)}});
    }

    result.elapsed_seconds = watch.seconds();
    return result;
}

} // namespace homoglab
