#include <cmath>
#include <random>
#include <vector>

#include "catch_amalgamated.hpp"

#include "homoglab/calculus/divform.hpp"
#include "homoglab/calculus/poisson.hpp"
#include "homoglab/calculus/stencils.hpp"
#include "homoglab/random/coefficient.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"

using namespace homoglab;

namespace {

ScalarField random_zero_mean(const TorusGrid& g, unsigned tag) {
    std::mt19937 gen(tag);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScalarField f(g);
    for (std::size_t s = 0; s < g.cells(); ++s) f[s] = u(gen);
    f.subtract_mean();
    return f;
}

VectorField random_vector(const TorusGrid& g, unsigned tag) {
    std::mt19937 gen(tag);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorField f(g);
    for (int k = 0; k < g.dim(); ++k)
        for (std::size_t s = 0; s < g.cells(); ++s) f.at(k, s) = u(gen);
    return f;
}

CoefficientField sampled_map(const TorusGrid& g, CoefficientMapSpec::Kind kind, std::uint64_t seed) {
    const KernelC0 k = default_bump_kernel(g.dim(), g.h());
    CoefficientMapSpec spec;
    spec.d = g.dim();
    spec.kind = kind;
    return sample_coefficient_field(build_gaussian_field(sample_white_noise(g, 1, seed), k), spec);
}

double rel_gap(const ScalarField& a, const ScalarField& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) {
        num += (a[s] - b[s]) * (a[s] - b[s]);
        den += b[s] * b[s];
    }
    return std::sqrt(num / den);
}

} // namespace

TEST_CASE("spectral Poisson solve inverts the discrete Laplacian", "[solver]") {
    const TorusGrid g(2, 32, 8.0);
    const ScalarField rhs = random_zero_mean(g, 11);
    const ScalarField u = solve_poisson(rhs, g.h());
    REQUIRE(std::abs(u.mean()) < 1e-13);
    ScalarField back = divergence(gradient(u, g.h()), g.h());
    double gap = 0.0;
    for (std::size_t s = 0; s < g.cells(); ++s) gap = std::max(gap, std::abs(-back[s] - rhs[s]));
    REQUIRE(gap < 1e-11 * rhs.max_abs());

    ScalarField biased = rhs;
    for (std::size_t s = 0; s < g.cells(); ++s) biased[s] += 0.3;
    REQUIRE_THROWS_AS(solve_poisson(biased, g.h()), solver_error);
}

TEST_CASE("identity coefficient reduces the div-form solve to the Poisson solve", "[solver]") {
    const TorusGrid g(2, 32, 8.0);
    const CoefficientField a = constant_coefficient_field(g, Mat::identity(2), 1.0);
    const VectorField f = random_vector(g, 21);
    SolverReport rep;
    const ScalarField u = solve_divform(a, f, 1e-13, g.h(), &rep);
    const ScalarField v = solve_poisson(divergence(f, g.h()), g.h());
    REQUIRE(rel_gap(u, v) < 1e-10);
    REQUIRE(rep.converged);
    REQUIRE(rep.method == "pcg");
    REQUIRE(rep.preconditioner == "fft-mean");
    // the preconditioner is the exact inverse here
    REQUIRE(rep.iterations <= 3);
}

TEST_CASE("manufactured solution is recovered for a sampled symmetric coefficient", "[solver]") {
    const TorusGrid g(2, 32, 8.0);
    const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::clipped_sigmoid_isotropic, 3);
    REQUIRE(a.is_symmetric());
    const ScalarField u_exact = random_zero_mean(g, 31);
    VectorField f = apply_flux(a, gradient(u_exact, g.h()));
    f *= -1.0;
    SolverReport rep;
    const ScalarField u = solve_divform(a, f, 1e-13, g.h(), &rep);
    REQUIRE(rep.converged);
    REQUIRE(rep.rel_residual <= 1e-13);
    REQUIRE(rep.iterations > 0);
    REQUIRE(rep.tol == 1e-13);
    REQUIRE(rel_gap(u, u_exact) < 1e-8);
}

TEST_CASE("nonsymmetric coefficients go through BiCGStab and still solve", "[solver]") {
    const TorusGrid g(2, 32, 8.0);
    const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::nonsymmetric_skew, 5);
    REQUIRE_FALSE(a.is_symmetric());
    const ScalarField u_exact = random_zero_mean(g, 41);
    VectorField f = apply_flux(a, gradient(u_exact, g.h()));
    f *= -1.0;
    SolverReport rep;
    const ScalarField u = solve_divform(a, f, 1e-13, g.h(), &rep);
    REQUIRE(rep.converged);
    REQUIRE(rep.method == "bicgstab");
    REQUIRE(rel_gap(u, u_exact) < 1e-8);
}

TEST_CASE("flux application is the exact adjoint of its transposed coefficient", "[solver]") {
    const TorusGrid g(2, 16, 4.0);
    const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::nonsymmetric_skew, 7);
    const CoefficientField at = a.adjoint();
    for (std::size_t s = 0; s < g.cells(); ++s) {
        const Mat gap = at.at(s).transpose() - a.at(s);
        REQUIRE(gap.max_abs() == 0.0);
    }
    const VectorField w = random_vector(g, 51);
    const VectorField v = random_vector(g, 52);
    const double lhs = average_dot(apply_flux(a, w), v);
    const double rhs = average_dot(w, apply_flux(at, v));
    REQUIRE(std::abs(lhs - rhs) < 1e-13 * (std::abs(lhs) + 1.0));
}

TEST_CASE("one-dimensional solves integrate the flux constancy exactly", "[solver]") {
    const TorusGrid g(1, 64, 8.0);
    const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::clipped_sigmoid_isotropic, 9);
    const ScalarField u_exact = random_zero_mean(g, 61);
    VectorField f = apply_flux(a, gradient(u_exact, g.h()));
    f *= -1.0;
    SolverReport rep;
    const ScalarField u = solve_divform(a, f, 1e-12, g.h(), &rep);
    REQUIRE(rep.method == "direct-1d");
    REQUIRE(rep.iterations == 0);
    REQUIRE(rep.converged);
    REQUIRE(rep.rel_residual < 1e-12);
    REQUIRE(rel_gap(u, u_exact) < 1e-11);
}

TEST_CASE("a coefficient without an ellipticity certificate is rejected", "[solver]") {
    const TorusGrid g(2, 16, 4.0);
    const CoefficientField a = sampled_map(g, CoefficientMapSpec::Kind::linear_test, 13);
    const VectorField f = random_vector(g, 71);
    REQUIRE_THROWS_AS(solve_divform(a, f, 1e-10, g.h()), solver_error);
}
