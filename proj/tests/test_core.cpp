#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"

#include "homoglab/calculus/stencils.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/core/grid.hpp"
#include "homoglab/core/multiindex.hpp"
#include "homoglab/core/smallmat.hpp"

using namespace homoglab;

namespace {

ScalarField random_scalar(const TorusGrid& g, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScalarField out(g);
    for (std::size_t s = 0; s < g.cells(); ++s) out[s] = u(gen);
    return out;
}

VectorField random_vector(const TorusGrid& g, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorField out(g);
    for (int k = 0; k < g.dim(); ++k)
        for (std::size_t s = 0; s < g.cells(); ++s) out.at(k, s) = u(gen);
    return out;
}

double dot(const ScalarField& a, const ScalarField& b) {
    long double acc = 0.0L;
    for (std::size_t s = 0; s < a.grid().cells(); ++s) acc += static_cast<long double>(a[s]) * b[s];
    return static_cast<double>(acc);
}

double dot(const VectorField& a, const VectorField& b) {
    long double acc = 0.0L;
    const TorusGrid& g = a.grid();
    for (int k = 0; k < g.dim(); ++k)
        for (std::size_t s = 0; s < g.cells(); ++s)
            acc += static_cast<long double>(a.at(k, s)) * b.at(k, s);
    return static_cast<double>(acc);
}

} // namespace

TEST_CASE("torus grid indexing wraps consistently", "[core]") {
    const TorusGrid g(2, 8, 4.0);
    REQUIRE(g.cells() == 64);
    REQUIRE(g.h() == 0.5);
    REQUIRE(g.eps() == 0.25);
    for (std::size_t s = 0; s < g.cells(); ++s) {
        for (int k = 0; k < g.dim(); ++k) {
            REQUIRE(g.down(k, g.up(k, s)) == s);
            REQUIRE(g.up(k, g.down(k, s)) == s);
        }
        REQUIRE(g.index(g.coords(s)) == s);
    }
    REQUIRE(g.index({8, 8, 0}) == g.index({0, 0, 0}));
    REQUIRE(g.index({-1, 3, 0}) == g.index({7, 3, 0}));
}

TEST_CASE("multi-index enumeration and ranking invert each other", "[core]") {
    for (int d : {1, 2, 3})
        for (int k : {1, 2, 3}) {
            const auto tuples = enumerate_tuples(d, k);
            REQUIRE(tuples.size() == static_cast<std::size_t>(pow_int(d, k)));
            for (std::size_t r = 0; r < tuples.size(); ++r)
                REQUIRE(tuple_rank(d, tuples[r]) == r);
        }
    REQUIRE(binomial(4, 2) == 6);
    REQUIRE(binomial(5, 0) == 1);
    REQUIRE(binomial(6, 6) == 1);
}

TEST_CASE("small matrix helpers", "[core]") {
    Mat m = Mat::zero(2);
    m(0, 0) = 2.0;
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    m(1, 1) = 2.0;
    REQUIRE(std::abs(m.min_sym_eig() - 1.0) < 1e-12);

    Mat a = Mat::zero(2);
    a(0, 1) = 3.0;
    const Mat at = a.transpose();
    REQUIRE(at(1, 0) == 3.0);
    REQUIRE(at(0, 1) == 0.0);

    const Mat s = a.sym();
    REQUIRE(std::abs(s(0, 1) - 1.5) < 1e-15);
    REQUIRE(std::abs(s(1, 0) - 1.5) < 1e-15);

    const Mat c = Mat::scaled_identity(3, 2.5);
    REQUIRE(std::abs(c.op_norm() - 2.5) < 1e-12);
}

TEST_CASE("field norms agree with their definitions", "[core]") {
    const TorusGrid g(2, 16, 8.0);
    ScalarField u = random_scalar(g, 11);
    const double celldot = dot(u, u);
    const double vol = g.h() * g.h();
    REQUIRE(std::abs(u.l2() - std::sqrt(vol * celldot)) < 1e-12 * (1.0 + u.l2()));
    REQUIRE(std::abs(u.rms() - std::sqrt(celldot / static_cast<double>(g.cells()))) < 1e-12);
    u.subtract_mean();
    REQUIRE(std::abs(u.mean()) < 1e-15);
}

TEST_CASE("skew storage is antisymmetric by construction", "[core]") {
    const TorusGrid g(3, 4, 2.0);
    SkewField sig(g);
    REQUIRE(sig.pair_count() == 3);
    sig.pair_plane(SkewField::pair_index(3, 0, 2))[5] = 1.25;
    REQUIRE(sig.get(0, 2, 5) == 1.25);
    REQUIRE(sig.get(2, 0, 5) == -1.25);
    REQUIRE(sig.get(1, 1, 5) == 0.0);
}

TEST_CASE("gradient and divergence are negative adjoints", "[core]") {
    const TorusGrid g(2, 12, 3.0);
    const ScalarField u = random_scalar(g, 3);
    const VectorField f = random_vector(g, 4);
    const double lhs = dot(gradient(u, g.h()), f);
    const double rhs = -dot(u, divergence(f, g.h()));
    REQUIRE(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs)));
}

TEST_CASE("curl of a gradient vanishes and has divergence-free rows", "[core]") {
    const TorusGrid g(2, 10, 5.0);
    const ScalarField u = random_scalar(g, 9);
    const SkewField curl_grad = curl_pair(gradient(u, g.h()), g.h());
    REQUIRE(curl_grad.max_abs() < 1e-13);

    const VectorField x = random_vector(g, 10);
    const SkewField c = curl_pair(x, g.h());
    const ScalarField div_div = divergence(skew_row_divergence(c, g.h()), g.h());
    REQUIRE(div_div.max_abs() < 1e-11);
}

TEST_CASE("iterated differences commute across direction order", "[core]") {
    const TorusGrid g(2, 8, 2.0);
    const ScalarField u = random_scalar(g, 21);
    const ScalarField a = iterated_forward_diff(u, {0, 1}, g.h());
    const ScalarField b = iterated_forward_diff(u, {1, 0}, g.h());
    for (std::size_t s = 0; s < g.cells(); ++s) REQUIRE(std::abs(a[s] - b[s]) < 1e-12);
}

TEST_CASE("edge and center averaging are adjoint", "[core]") {
    const TorusGrid g(2, 8, 4.0);
    const ScalarField x = random_scalar(g, 30);
    const ScalarField y = random_scalar(g, 31);
    ScalarField px(g), py(g);
    avg_edge_to_center(g, 1, x.data(), px.data());
    avg_center_to_edge(g, 1, y.data(), py.data());
    REQUIRE(std::abs(dot(px, y) - dot(x, py)) < 1e-12 * (1.0 + std::abs(dot(px, y))));
}
