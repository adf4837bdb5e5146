#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "homoglab/commutators/commutator.hpp"
#include "homoglab/commutators/standard.hpp"
#include "homoglab/core/errors.hpp"
#include "homoglab/core/multiindex.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/random/coefficient.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"
#include "homoglab/twoscale/cascade.hpp"
#include "homoglab/twoscale/heterogeneous.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

enum class ObservableKind {
    field_average,       // int g . grad u_eps
    commutator,          // int grad vbar^n . Xi^n[grad u_eps]
    standard_commutator, // int g . Xi°^n[grad w]
    pathwise_gap,        // int g . (Xi^n[grad u_eps] - Xi°^n[grad ubar^n_eps])
    corrector_average,   // int g phi^n_t(./eps)
};

inline std::string observable_kind_name(ObservableKind k) {
    switch (k) {
        case ObservableKind::field_average: return "field-average";
        case ObservableKind::commutator: return "commutator";
        case ObservableKind::standard_commutator: return "standard-commutator";
        case ObservableKind::pathwise_gap: return "pathwise-gap";
        case ObservableKind::corrector_average: return "corrector-average";
    }
    return "?";
}

// What to measure on each sample. Test functions are zero-mean by
// construction (FourierPoly rejects the zero wave), and each kind declares
// the machinery it needs so the ensemble driver can validate up front.
struct ObservableSpec {
    explicit ObservableSpec(int d) : g(d), f(d), w(d), g_scalar(d) {}

    ObservableKind kind = ObservableKind::field_average;
    int order = 1;
    FourierVectorPoly g;     // pairing test function (also drives the dual cascade)
    FourierVectorPoly f;     // heterogeneous forcing, div-form right-hand side
    FourierPoly w;           // smooth profile for the standard commutator
    FourierPoly g_scalar;    // scalar test function for corrector averages
    IndexTuple tuple;        // corrector-average target multi-index

    bool needs_solve() const {
        return kind == ObservableKind::field_average || kind == ObservableKind::commutator ||
               kind == ObservableKind::pathwise_gap;
    }
    bool needs_calibration() const {
        return kind == ObservableKind::commutator || kind == ObservableKind::standard_commutator ||
               kind == ObservableKind::pathwise_gap;
    }
    int hierarchy_order() const {
        if (kind == ObservableKind::standard_commutator || kind == ObservableKind::pathwise_gap ||
            kind == ObservableKind::corrector_average)
            return order;
        return 0;
    }

    void validate(int d) const {
        if (order < 1) throw config_error("observable: order must be >= 1");
        if (kind == ObservableKind::corrector_average && static_cast<int>(tuple.size()) != order)
            throw config_error("observable: corrector-average tuple length must equal the order");
        for (int idx : tuple)
            if (idx < 0 || idx >= d) throw config_error("observable: tuple direction out of range");
    }
};

// fixed per-run sampling environment: geometry, kernel, coefficient law
struct LabContext {
    const TorusGrid* grid = nullptr;
    KernelC0 kernel;
    CoefficientMapSpec map;
    double solver_tol = 1e-8;
    double hierarchy_tol = 1e-8;
    // Optional replacement for the sample pipeline, e.g. a disk cache.
    std::function<GaussianFieldSample(const LabContext&, std::uint64_t)> field_source;

    GaussianFieldSample sample_field(std::uint64_t seed) const {
        if (field_source) return field_source(*this, seed);
        const WhiteNoiseSample noise = sample_white_noise(*grid, map.kappa, seed);
        return build_gaussian_field(noise, kernel);
    }

    CoefficientField sample(std::uint64_t seed) const {
        return sample_coefficient_field(sample_field(seed), map);
    }
};

struct SeedOutcome {
    double value = 0.0;
    double reference = 0.0;  // pathwise-gap: the standard-commutator pairing it shadows
    bool has_reference = false;
    SolverReport report;
    bool solved = false;
};

// deterministic pieces shared by every seed of one ensemble
struct ObservablePlan {
    ObservablePlan(const ObservableSpec& s, const LabContext& c)
        : spec(&s), ctx(&c), grad_vbar(*c.grid), ubar(c.grid->dim()), g_sampled(*c.grid),
          g_scalar_sampled(*c.grid) {}

    const ObservableSpec* spec;
    const LabContext* ctx;
    const AbarTensors* frozen = nullptr;      // calibration mean, primal
    const AbarTensors* frozen_dual = nullptr; // calibration mean, dual
    VectorField grad_vbar;                    // commutator kind: dual cascade gradient
    FourierPoly ubar;                         // pathwise-gap kind: primal cascade profile
    VectorField g_sampled;
    ScalarField g_scalar_sampled;

    static ObservablePlan prepare(const ObservableSpec& spec, const LabContext& ctx,
                                  const AbarTensors* primal, const AbarTensors* dual) {
        const TorusGrid& g = *ctx.grid;
        spec.validate(g.dim());
        ObservablePlan plan(spec, ctx);
        plan.frozen = primal;
        plan.frozen_dual = dual;
        if (spec.needs_calibration()) {
            if (primal == nullptr)
                throw config_error("observable '" + observable_kind_name(spec.kind) +
                                   "' needs calibrated tensors; run calibrate first");
            if (spec.order > primal->max_order)
                throw config_error("observable: calibration order too low");
        }
        if (spec.kind == ObservableKind::commutator) {
            if (dual == nullptr)
                throw config_error("observable 'commutator' needs dual calibrated tensors; run calibrate first");
            const CascadeSolution vbar = homogenized_cascade(*dual, spec.g, spec.order, g, g.eps());
            plan.grad_vbar = gradient(vbar.assembled.sample(g), 1.0 / g.n());
        }
        if (spec.kind == ObservableKind::pathwise_gap) {
            const CascadeSolution ubar = homogenized_cascade(*primal, spec.f, spec.order, g, g.eps());
            plan.ubar = ubar.assembled;
        }
        if (spec.kind == ObservableKind::field_average || spec.kind == ObservableKind::standard_commutator ||
            spec.kind == ObservableKind::pathwise_gap)
            plan.g_sampled = spec.g.sample(g);
        if (spec.kind == ObservableKind::corrector_average)
            plan.g_scalar_sampled = spec.g_scalar.sample(g);
        return plan;
    }
};

inline SeedOutcome evaluate_observable(const ObservablePlan& plan, std::uint64_t seed) {
    const ObservableSpec& spec = *plan.spec;
    const LabContext& ctx = *plan.ctx;
    const TorusGrid& g = *ctx.grid;
    const double eps = g.eps();

    const CoefficientField a = ctx.sample(seed);
    SeedOutcome out;

    switch (spec.kind) {
        case ObservableKind::field_average: {
            const HeterogeneousSolution sol = solve_heterogeneous(a, spec.f, ctx.solver_tol);
            out.report = sol.report;
            out.solved = true;
            out.value = average_dot(plan.g_sampled, sol.grad);
            break;
        }
        case ObservableKind::commutator: {
            const HeterogeneousSolution sol = solve_heterogeneous(a, spec.f, ctx.solver_tol);
            out.report = sol.report;
            out.solved = true;
            const VectorField xi = commutator(a, *plan.frozen, sol.grad, spec.order, eps);
            out.value = average_dot(plan.grad_vbar, xi);
            break;
        }
        case ObservableKind::standard_commutator: {
            const CorrectorSet set = build_hierarchy(a, spec.order, ctx.hierarchy_tol);
            const VectorField xo = standard_commutator_explicit(a, set, *plan.frozen, spec.w, spec.order, eps);
            out.value = average_dot(plan.g_sampled, xo);
            break;
        }
        case ObservableKind::pathwise_gap: {
            const HeterogeneousSolution sol = solve_heterogeneous(a, spec.f, ctx.solver_tol);
            out.report = sol.report;
            out.solved = true;
            const CorrectorSet set = build_hierarchy(a, spec.order, ctx.hierarchy_tol);
            const VectorField xi = commutator(a, *plan.frozen, sol.grad, spec.order, eps);
            const VectorField xo = standard_commutator_explicit(a, set, *plan.frozen, plan.ubar, spec.order, eps);
            VectorField gap = xi;
            gap -= xo;
            out.value = average_dot(plan.g_sampled, gap);
            out.reference = average_dot(plan.g_sampled, xo);
            out.has_reference = true;
            break;
        }
        case ObservableKind::corrector_average: {
            const CorrectorSet set = build_hierarchy(a, spec.order, ctx.hierarchy_tol);
            const CorrectorLevel& lvl = set.level(spec.order);
            const ScalarField& phi = lvl.phi[lvl.index_of(spec.tuple)];
            long double acc = 0.0L;
            for (std::size_t s = 0; s < g.cells(); ++s)
                acc += static_cast<long double>(plan.g_scalar_sampled[s]) * phi[s];
            out.value = static_cast<double>(acc / static_cast<long double>(g.cells()));
            break;
        }
    }
    return out;
}

} // namespace homoglab
