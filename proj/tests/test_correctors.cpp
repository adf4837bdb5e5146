#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"

#include "homoglab/calculus/stencils.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/random/coefficient.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"

using namespace homoglab;

namespace {

CoefficientField sampled_map(const TorusGrid& g, CoefficientMapSpec::Kind kind, std::uint64_t seed) {
    const KernelC0 k = default_bump_kernel(g.dim(), g.h());
    CoefficientMapSpec spec;
    spec.d = g.dim();
    spec.kind = kind;
    return sample_coefficient_field(build_gaussian_field(sample_white_noise(g, 1, seed), k), spec);
}

} // namespace

TEST_CASE("one-dimensional first-order corrector hits the harmonic-mean closed form", "[correctors]") {
    const TorusGrid g(1, 64, 8.0);
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::clipped_sigmoid_isotropic, seed);
        const CorrectorSet set = build_hierarchy(a, 1, 1e-12);

        long double inv = 0.0L;
        for (std::size_t s = 0; s < g.cells(); ++s) inv += 1.0L / a.block(s)[0];
        const double hm = static_cast<double>(g.cells() / inv);
        REQUIRE(std::abs(set.abar1()(0, 0) - hm) <= 1e-12 * hm);

        const VectorField gphi = gradient(set.level(1).phi[0], g.h());
        for (std::size_t s = 0; s < g.cells(); ++s)
            REQUIRE(std::abs(gphi.at(0, s) - (hm / a.block(s)[0] - 1.0)) < 1e-10);
    }
}

TEST_CASE("constant coefficients produce vanishing correctors at every order", "[correctors]") {
    const TorusGrid g(2, 16, 4.0);
    const double c = 1.7;
    const CoefficientField a = constant_coefficient_field(g, Mat::scaled_identity(2, c), c);
    const CorrectorSet set = build_hierarchy(a, 2, 1e-12);

    const Mat a1 = set.abar1();
    REQUIRE(std::abs(a1(0, 0) - c) < 1e-15);
    REQUIRE(std::abs(a1(1, 1) - c) < 1e-15);
    REQUIRE(std::abs(a1(0, 1)) < 1e-15);
    REQUIRE(std::abs(a1(1, 0)) < 1e-15);

    for (int n = 1; n <= 2; ++n) {
        const CorrectorLevel& lv = set.level(n);
        for (std::size_t t = 0; t < lv.tuples.size(); ++t) {
            REQUIRE(lv.phi[t].max_abs() == 0.0);
            REQUIRE(lv.sigma[t].max_abs() == 0.0);
            double qmax = 0.0;
            for (int k = 0; k < 2; ++k)
                for (std::size_t s = 0; s < g.cells(); ++s)
                    qmax = std::max(qmax, std::abs(lv.q[t].at(k, s)));
            REQUIRE(qmax == 0.0);
            REQUIRE(lv.reports[t].converged);
        }
    }
    for (const IndexTuple& t : set.level(2).tuples)
        for (int j = 0; j < 2; ++j) REQUIRE(set.abar_entry(2, j, t) == 0.0);
}

TEST_CASE("hierarchy levels honor the residual, mean-flux, and sigma contracts", "[correctors]") {
    const TorusGrid g(2, 32, 8.0);
    const double tol = 1e-11;
    const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::clipped_sigmoid_isotropic, 17);
    const CorrectorSet set = build_hierarchy(a, 2, tol);

    for (int n = 1; n <= 2; ++n) {
        const CorrectorLevel& lv = set.level(n);
        for (std::size_t t = 0; t < lv.tuples.size(); ++t) {
            REQUIRE(lv.reports[t].converged);
            REQUIRE(lv.reports[t].rel_residual <= tol);
            REQUIRE(lv.div_q_norm[t] <= 2.0 * tol * lv.rhs_div_norm[t]);
            const double scale = std::sqrt(average_sqnorm(lv.q[t])) + 1.0;
            REQUIRE(lv.q_mean_abs[t] <= 1e-13 * scale);
            REQUIRE(lv.curl_mean_abs[t] <= 1e-10 * scale / g.h());
            REQUIRE(lv.sigma_gap_norm[t] <= lv.sigma_gap_bound[t] * (1.0 + 1e-6) + 1e-15);
        }
    }
}

TEST_CASE("dual hierarchy is the hierarchy of the transposed coefficient", "[correctors]") {
    const TorusGrid g(2, 16, 4.0);
    const double tol = 1e-11;
    const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::nonsymmetric_skew, 23);
    const CorrectorSet dual = build_hierarchy(a, 1, tol, true);
    const CorrectorSet manual = build_hierarchy(a.adjoint(), 1, tol);
    REQUIRE(dual.dual);
    REQUIRE_FALSE(manual.dual);
    const CorrectorLevel& lhs = dual.level(1);
    const CorrectorLevel& rhs = manual.level(1);
    for (std::size_t t = 0; t < lhs.tuples.size(); ++t) {
        for (std::size_t s = 0; s < g.cells(); ++s)
            REQUIRE(lhs.phi[t][s] == rhs.phi[t][s]);
        REQUIRE(lhs.abar[t] == rhs.abar[t]);
    }
}

TEST_CASE("first-order tensor symmetry links the primal and dual builds", "[correctors]") {
    const TorusGrid g(2, 32, 8.0);
    const double tol = 1e-12;
    const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::nonsymmetric_skew, 29);
    const CorrectorSet primal = build_hierarchy(a, 1, tol);
    const CorrectorSet dual = build_hierarchy(a, 1, tol, true);

    // abar*^1 = (abar^1)^T, up to the solver residual
    const Mat gap = dual.abar1() - primal.abar1().transpose();
    REQUIRE(gap.max_abs() < 1e-8);
    REQUIRE(symmetry_identity_residual(primal, dual, 1) < 1e-8);

    // the skew part is genuinely exercised
    REQUIRE((primal.abar1() - primal.abar1().transpose()).max_abs() > 1e-4);
}

TEST_CASE("per-tuple tensor entries collect into the calibration mean", "[correctors]") {
    const TorusGrid g(2, 16, 4.0);
    std::vector<AbarTensors> samples;
    for (std::uint64_t seed : {31ull, 32ull, 33ull}) {
        const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::clipped_sigmoid_isotropic, seed);
        samples.push_back(AbarTensors::from_correctors(build_hierarchy(a, 2, 1e-10)));
    }
    const AbarCalibration cal = calibrate_abar(samples);
    REQUIRE(cal.samples == 3);
    const IndexTuple t{0, 1};
    long double acc = 0.0L;
    for (const AbarTensors& s : samples) acc += s.entry(2, 0, t);
    REQUIRE(std::abs(cal.mean.entry(2, 0, t) - static_cast<double>(acc / 3.0L)) < 1e-15);
    REQUIRE(cal.stderr_.entry(2, 0, t) >= 0.0);
}
