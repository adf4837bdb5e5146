#include <cmath>
#include <complex>
#include <vector>

#include "catch_amalgamated.hpp"

#include "homoglab/calculus/stencils.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/random/coefficient.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"
#include "homoglab/twoscale/cascade.hpp"
#include "homoglab/twoscale/expansion.hpp"
#include "homoglab/twoscale/heterogeneous.hpp"
#include "homoglab/twoscale/testfn.hpp"

using namespace homoglab;

namespace {

CoefficientField sampled_map(const TorusGrid& g, std::uint64_t seed) {
    const KernelC0 k = default_bump_kernel(g.dim(), g.h());
    CoefficientMapSpec spec;
    spec.d = g.dim();
    return sample_coefficient_field(build_gaussian_field(sample_white_noise(g, 1, seed), k), spec);
}

double max_gap(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) m = std::max(m, std::abs(a[s] - b[s]));
    return m;
}

} // namespace

TEST_CASE("probe derivatives go through the forward stencil exactly", "[twoscale]") {
    const TorusGrid g(2, 32, 8.0);
    const FourierPoly w = default_scalar_probe(2, 0);
    const double mac = 1.0 / g.n();

    const IndexTuple dirs{0, 1, 0};
    const ScalarField via_symbol = w.discrete_derivative(dirs, g.n()).sample(g);
    const ScalarField via_stencil = iterated_forward_diff(w.sample(g), dirs, mac);
    REQUIRE(max_gap(via_symbol, via_stencil) < 1e-9 * (1.0 + via_stencil.max_abs()));

    // analytic derivative of a single cosine, checked pointwise
    FourierPoly one(2);
    one.add_cosine({1, 2, 0}, 0.8, 0.7);
    const ScalarField der = one.sample_derivative(g, IndexTuple{0});
    for (std::size_t s = 0; s < g.cells(); ++s) {
        const auto c = g.coords(s);
        const double phase = 2.0 * M_PI * (c[0] + 2.0 * c[1]) / g.n() + 0.7;
        const double want = -0.8 * 2.0 * M_PI * std::sin(phase);
        REQUIRE(std::abs(der[s] - want) < 1e-12);
    }
}

TEST_CASE("probe construction rejects degenerate waves", "[twoscale]") {
    FourierPoly w(2);
    REQUIRE_THROWS_AS(w.add_cosine({0, 0, 0}, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(w.add_cosine({1, 0, 2}, 1.0), std::invalid_argument);

    const TorusGrid g(2, 32, 8.0);
    FourierPoly fine(2);
    fine.add_cosine({16, 0, 0}, 1.0);
    REQUIRE_THROWS_AS(fine.check_resolvable(g), std::invalid_argument);
    FourierPoly ok(2);
    ok.add_cosine({15, 0, 0}, 1.0);
    ok.check_resolvable(g);
}

TEST_CASE("constant-coefficient cascade matches a hand mode-by-mode solve", "[twoscale]") {
    const TorusGrid g(1, 64, 1.0);
    const int n = g.n();
    const double c = 1.3, b = 0.45, eps = 0.25;

    AbarTensors abar = AbarTensors::scaled_identity(1, 2, c);
    abar.entries[1][0][0] = b;

    FourierVectorPoly f(1);
    f.comp[0].add_cosine({1, 0, 0}, 1.0, 0.3);
    f.comp[0].add_cosine({3, 0, 0}, 0.5, 1.9);

    const CascadeSolution sol = homogenized_cascade(abar, f, 2, g, eps);
    REQUIRE(sol.equation_residual[0] < 1e-12);
    REQUIRE(sol.equation_residual[1] < 1e-12);

    // hand solve: per signed mode k, with gsym(k) = (e^{2 pi i k/n} - 1) n,
    //   u1(k) = -conj(gsym) fhat / (c |gsym|^2)
    //   u2(k) = -conj(gsym) (b gsym^2 u1) / (c |gsym|^2)
    const std::vector<std::pair<int, std::complex<double>>> fmodes{
        {1, std::polar(0.5 * 1.0, 0.3)},
        {-1, std::polar(0.5 * 1.0, -0.3)},
        {3, std::polar(0.5 * 0.5, 1.9)},
        {-3, std::polar(0.5 * 0.5, -1.9)},
    };
    ScalarField u1_hand(g), u2_hand(g);
    for (const auto& [k, fhat] : fmodes) {
        const double th = 2.0 * M_PI * k / n;
        const std::complex<double> gs = (std::complex<double>(std::cos(th), std::sin(th)) - 1.0) *
                                        static_cast<double>(n);
        const std::complex<double> u1 = -std::conj(gs) * fhat / (c * std::norm(gs));
        const std::complex<double> u2 = -std::conj(gs) * (b * gs * gs * u1) / (c * std::norm(gs));
        for (std::size_t s = 0; s < g.cells(); ++s) {
            const double ph = 2.0 * M_PI * k * static_cast<double>(s) / n;
            const std::complex<double> e(std::cos(ph), std::sin(ph));
            u1_hand[s] += (u1 * e).real();
            u2_hand[s] += (u2 * e).real();
        }
    }
    const ScalarField u1_lib = sol.u_tilde[0].sample(g);
    const ScalarField u2_lib = sol.u_tilde[1].sample(g);
    REQUIRE(max_gap(u1_lib, u1_hand) < 1e-12);
    REQUIRE(max_gap(u2_lib, u2_hand) < 1e-12);

    ScalarField assembled(g);
    for (std::size_t s = 0; s < g.cells(); ++s) assembled[s] = u1_hand[s] + eps * u2_hand[s];
    REQUIRE(max_gap(sol.assembled.sample(g), assembled) < 1e-12);
}

TEST_CASE("cascade drops vanishing higher tensors and rejects singular ones", "[twoscale]") {
    const TorusGrid g(2, 32, 8.0);
    FourierVectorPoly f = default_vector_probe(2, 0);
    const CascadeSolution sol = homogenized_cascade(AbarTensors::scaled_identity(2, 2, 1.7), f, 2, g, 0.125);
    REQUIRE(sol.u_tilde[1].empty());
    REQUIRE(sol.equation_residual[0] < 1e-12);

    REQUIRE_THROWS_AS(homogenized_cascade(AbarTensors::scaled_identity(2, 1, 0.0), f, 1, g, 0.125),
                      solver_error);
}

TEST_CASE("two-scale reconstruction assembles the corrector levels", "[twoscale]") {
    const TorusGrid g(2, 32, 8.0);
    const CoefficientField a = sampled_map(g, 3);
    const CorrectorSet set = build_hierarchy(a, 2, 1e-11);
    const FourierPoly w = default_scalar_probe(2, 0);
    const double eps = 0.125;

    const ScalarField f0 = two_scale_F(set, w, 0, eps);
    REQUIRE(max_gap(f0, w.sample(g)) == 0.0);

    ScalarField f1_direct = w.sample(g);
    for (int i = 0; i < 2; ++i) {
        const ScalarField der = w.sample_derivative(g, IndexTuple{i});
        const ScalarField& phi = set.level(1).phi[set.level(1).index_of(IndexTuple{i})];
        for (std::size_t s = 0; s < g.cells(); ++s) f1_direct[s] += eps * phi[s] * der[s];
    }
    const ScalarField f1 = two_scale_F(set, w, 1, eps);
    REQUIRE(max_gap(f1, f1_direct) < 1e-13 * (1.0 + f1_direct.max_abs()));

    for (int n = 1; n <= 2; ++n) {
        const LinkIdentityReport rep = link_identity(set, w, n, eps);
        REQUIRE(rep.e_norm > 0.0);
        REQUIRE(rep.algebraic_rel < 1e-12);
        REQUIRE(rep.continuum_rel < 0.5);
    }
}

TEST_CASE("intertwining closes exactly for constant coefficients", "[twoscale]") {
    const TorusGrid g(2, 16, 4.0);
    const double c = 1.7;
    const CoefficientField a = constant_coefficient_field(g, Mat::scaled_identity(2, c), c);
    const CorrectorSet set = build_hierarchy(a, 2, 1e-12);
    const AbarTensors abar = AbarTensors::from_correctors(set);
    const FourierPoly w = default_scalar_probe(2, 1);
    REQUIRE(intertwining_residual(a, set, abar, w, 1, 0.125) < 1e-12);
    REQUIRE(intertwining_residual(a, set, abar, w, 2, 0.125) < 1e-12);
}

TEST_CASE("heterogeneous solve satisfies its equation through the stencils", "[twoscale]") {
    const TorusGrid g(2, 32, 8.0);
    const CoefficientField a = sampled_map(g, 5);
    const FourierVectorPoly f = default_vector_probe(2, 0);
    const HeterogeneousSolution sol = solve_heterogeneous(a, f, 1e-12);
    REQUIRE(sol.report.converged);
    REQUIRE(sol.eps == g.eps());

    const double mac = 1.0 / g.n();
    VectorField flux = apply_flux(a, gradient(sol.u, mac));
    flux += f.sample(g);
    const double rel = divergence(flux, mac).l2() / divergence(f.sample(g), mac).l2();
    REQUIRE(rel < 2e-12);

    // reconstructing from the solution's own gradient leaves nothing behind
    const CorrectorSet set = build_hierarchy(a, 1, 1e-10);
    const FourierPoly w = default_scalar_probe(2, 0);
    const VectorField gf = gradient(two_scale_F(set, w, 1, 0.125), mac);
    REQUIRE(expansion_error_norm(gf, set, w, 1, 0.125) == 0.0);
}
