#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iterator>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "homoglab/core/errors.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/io/sha256.hpp"
#include "homoglab/lab/observables.hpp"

namespace homoglab {

namespace detail {

// index-addressed parallel loop; writers land in distinct slots, so the
// thread schedule never changes results
inline void run_indexed(int threads, std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const int use = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(use));
    for (int t = 0; t < use; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (std::thread& th : pool) th.join();
}

inline std::vector<std::uint64_t> sorted_unique_seeds(std::vector<std::uint64_t> seeds, const char* who) {
    if (seeds.empty()) throw config_error(std::string(who) + ": empty seed list");
    std::sort(seeds.begin(), seeds.end());
    if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end())
        throw config_error(std::string(who) + ": duplicate seeds");
    return seeds;
}

} // namespace detail

// frozen homogenized tensors with the seeds they consumed, so evaluation
// ensembles can prove disjointness
struct LabCalibration {
    AbarCalibration primal;
    AbarCalibration dual;
    int order = 0;
    std::vector<std::uint64_t> seeds;
    std::string id;
};

inline std::string calibration_identity(const LabContext& ctx, int order,
                                        const std::vector<std::uint64_t>& seeds) {
    Sha256 h;
    char buf[160];
    const TorusGrid& g = *ctx.grid;
    std::snprintf(buf, sizeof buf, "calibration|d=%d|n=%d|L=%.17g|order=%d|", g.dim(), g.n(), g.side(), order);
    h.update(buf, std::strlen(buf));
    const std::string map = ctx.map.describe();
    h.update(map.data(), map.size());
    const std::string kh = ctx.kernel.content_hash();
    h.update(kh.data(), kh.size());
    for (std::uint64_t s : seeds) {
        std::snprintf(buf, sizeof buf, "%llu,", static_cast<unsigned long long>(s));
        h.update(buf, std::strlen(buf));
    }
    return h.hex_digest();
}

// Dedicated ensemble for the deterministic abar tensors: per seed, both the
// primal and the pointwise-transposed hierarchies to the requested order.
// Failures here are fatal; a calibration with holes would silently bias
// every fluctuation suite built on it.
inline LabCalibration calibrate_lab(const LabContext& ctx, int order, std::vector<std::uint64_t> seeds,
                                    int threads = 1) {
    seeds = detail::sorted_unique_seeds(std::move(seeds), "calibrate_lab");
    const std::size_t count = seeds.size();
    std::vector<AbarTensors> primal(count), dual(count);
    std::vector<std::string> errors(count);

    detail::run_indexed(threads, count, [&](std::size_t i) {
        try {
            const CoefficientField a = ctx.sample(seeds[i]);
            primal[i] = AbarTensors::from_correctors(build_hierarchy(a, order, ctx.hierarchy_tol));
            dual[i] = AbarTensors::from_correctors(build_hierarchy(a, order, ctx.hierarchy_tol, true));
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < count; ++i)
        if (!errors[i].empty())
            throw solver_error("calibrate_lab: seed " + std::to_string(seeds[i]) + " failed: " + errors[i]);

    LabCalibration cal;
    cal.order = order;
    cal.seeds = seeds;
    cal.primal = calibrate_abar(primal);
    cal.dual = calibrate_abar(dual);
    cal.id = calibration_identity(ctx, order, seeds);
    return cal;
}

struct EnsembleResult {
    std::string config_hash;
    std::string calibration_id; // "per-sample" when no calibration was involved
    ObservableKind kind = ObservableKind::field_average;
    int order = 1;
    double eps = 0.0;
    std::vector<std::uint64_t> seeds;  // sorted ascending
    std::vector<double> values;        // aligned with seeds; NaN marks a failed seed
    std::vector<double> references;    // pathwise-gap companion observable, else empty
    std::vector<std::string> failures; // "seed <s>: <what>"
    std::vector<SolverReport> reports; // aligned; empty method when no solve ran

    std::vector<double> ok_values() const {
        std::vector<double> out;
        out.reserve(values.size());
        for (double v : values)
            if (!std::isnan(v)) out.push_back(v);
        return out;
    }
    std::vector<double> ok_references() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < references.size(); ++i)
            if (!std::isnan(values[i])) out.push_back(references[i]);
        return out;
    }
};

// Seed-parallel Monte Carlo: sample, build what the observable kind needs,
// evaluate. Per-seed failures are recorded and leave a NaN slot; only a
// fully failed ensemble throws. Statistics downstream always see the
// seed-sorted value list, so reruns are bit-identical.
inline EnsembleResult run_ensemble(const ObservableSpec& spec, const LabContext& ctx,
                                   std::vector<std::uint64_t> seeds, const LabCalibration* calibration,
                                   int threads = 1, const std::string& config_hash = "unconfigured") {
    seeds = detail::sorted_unique_seeds(std::move(seeds), "run_ensemble");

    if (spec.needs_calibration()) {
        if (calibration == nullptr)
            throw config_error("run_ensemble: observable '" + observable_kind_name(spec.kind) +
                               "' needs frozen tensors; run calibrate first");
        if (calibration->order < spec.order)
            throw config_error("run_ensemble: calibration order " + std::to_string(calibration->order) +
                               " below observable order " + std::to_string(spec.order));
        std::vector<std::uint64_t> overlap;
        std::set_intersection(seeds.begin(), seeds.end(), calibration->seeds.begin(),
                              calibration->seeds.end(), std::back_inserter(overlap));
        if (!overlap.empty())
            throw config_error("run_ensemble: " + std::to_string(overlap.size()) +
                               " evaluation seed(s) reuse calibration seeds; ensembles must be disjoint");
    }

    const ObservablePlan plan = ObservablePlan::prepare(
        spec, ctx, calibration ? &calibration->primal.mean : nullptr,
        calibration ? &calibration->dual.mean : nullptr);

    const std::size_t count = seeds.size();
    EnsembleResult out;
    out.config_hash = config_hash;
    out.calibration_id = spec.needs_calibration() ? calibration->id : "per-sample";
    out.kind = spec.kind;
    out.order = spec.order;
    out.eps = ctx.grid->eps();
    out.seeds = seeds;
    out.values.assign(count, std::numeric_limits<double>::quiet_NaN());
    if (spec.kind == ObservableKind::pathwise_gap)
        out.references.assign(count, std::numeric_limits<double>::quiet_NaN());
    out.reports.assign(count, SolverReport{});
    std::vector<std::string> errors(count);

    detail::run_indexed(threads, count, [&](std::size_t i) {
        try {
            const SeedOutcome r = evaluate_observable(plan, seeds[i]);
            out.values[i] = r.value;
            if (r.has_reference) out.references[i] = r.reference;
            if (r.solved) out.reports[i] = r.report;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    std::size_t failed = 0;
    for (std::size_t i = 0; i < count; ++i)
        if (!errors[i].empty()) {
            ++failed;
            out.failures.push_back("seed " + std::to_string(seeds[i]) + ": " + errors[i]);
        }
    if (failed == count)
        throw solver_error("run_ensemble: every seed failed; first failure: " + out.failures.front());
    return out;
}

} // namespace homoglab
