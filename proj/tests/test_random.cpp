#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "catch_amalgamated.hpp"

#include "homoglab/random/coefficient.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"

using namespace homoglab;

namespace {

// Gauss-Hermite nodes/weights for E f(Z), Z standard normal, via the
// symmetric tridiagonal Jacobi matrix (Golub-Welsch).
void gauss_hermite_standard(int m, std::vector<double>& nodes, std::vector<double>& weights) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
    for (int i = 1; i < m; ++i) {
        const double b = std::sqrt(i / 2.0);
        jac(i, i - 1) = b;
        jac(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    nodes.resize(m);
    weights.resize(m);
    for (int i = 0; i < m; ++i) {
        nodes[i] = std::sqrt(2.0) * es.eigenvalues()(i); // physicists' x -> probabilists' z
        const double v0 = es.eigenvectors()(0, i);
        weights[i] = v0 * v0; // already sums to 1
    }
}

// covariance of the convolved field from the tap table alone
double direct_lag_covariance(const KernelC0& k, int lag0, int lag1) {
    std::map<std::array<int, 3>, double> taps;
    for (std::size_t t = 0; t < k.offsets.size(); ++t) taps[k.offsets[t]] = k.entry(t, 0, 0);
    long double acc = 0.0L;
    for (const auto& [o, v] : taps) {
        const std::array<int, 3> shifted{o[0] + lag0, o[1] + lag1, o[2]};
        auto it = taps.find(shifted);
        if (it != taps.end()) acc += static_cast<long double>(v) * it->second;
    }
    return static_cast<double>(acc) * k.cell_volume();
}

} // namespace

TEST_CASE("white noise is deterministic in the seed with variance 1/h^d", "[random]") {
    const TorusGrid g(2, 32, 16.0);
    const WhiteNoiseSample a = sample_white_noise(g, 1, 7);
    const WhiteNoiseSample b = sample_white_noise(g, 1, 7);
    REQUIRE(a.values == b.values);
    const WhiteNoiseSample c = sample_white_noise(g, 1, 8);
    REQUIRE(a.values != c.values);

    long double ss = 0.0L, quart = 0.0L;
    for (double v : a.values) {
        ss += static_cast<long double>(v) * v;
        quart += static_cast<long double>(v) * v * v * v;
    }
    const double var = static_cast<double>(ss) / static_cast<double>(g.cells());
    const double target = 1.0 / (g.h() * g.h());
    REQUIRE(std::abs(var / target - 1.0) < 5.0 * std::sqrt(2.0 / static_cast<double>(g.cells())));
    const double kurt = static_cast<double>(quart) / static_cast<double>(g.cells()) / (target * target);
    REQUIRE(std::abs(kurt - 3.0) < 1.0);
}

TEST_CASE("kernel validation normalizes the sup-convolved tap sum", "[random]") {
    const KernelC0 k = default_bump_kernel(2, 1.0);
    REQUIRE(k.radius_cells == 2);

    // independent recomputation of the norm on the validated kernel
    std::map<std::array<int, 3>, double> mag;
    for (std::size_t t = 0; t < k.offsets.size(); ++t) mag[k.offsets[t]] = k.max_abs_entry(t);
    const int ball = 1; // ceil(1/h) at h=1
    double sum = 0.0;
    for (int x = -(k.radius_cells + ball); x <= k.radius_cells + ball; ++x)
        for (int y = -(k.radius_cells + ball); y <= k.radius_cells + ball; ++y) {
            double sup = 0.0;
            for (int bx = -ball; bx <= ball; ++bx)
                for (int by = -ball; by <= ball; ++by) {
                    if (bx * bx + by * by > 1) continue; // unit-ball neighborhood at h=1
                    auto it = mag.find({x + bx, y + by, 0});
                    if (it != mag.end()) sup = std::max(sup, it->second);
                }
            sum += sup;
        }
    REQUIRE(std::abs(sum * k.cell_volume() - 1.0) < 1e-12);

    // idempotence and scale invariance
    const KernelC0 again = validate_kernel(k);
    for (std::size_t t = 0; t < k.values.size(); ++t)
        for (std::size_t e = 0; e < k.values[t].size(); ++e)
            REQUIRE(std::abs(again.values[t][e] - k.values[t][e]) <= 1e-16 * std::abs(k.values[t][e]));
    KernelC0 scaled = k;
    for (auto& v : scaled.values)
        for (double& x : v) x *= 7.0;
    const KernelC0 rescaled = validate_kernel(scaled);
    for (std::size_t t = 0; t < k.values.size(); ++t)
        for (std::size_t e = 0; e < k.values[t].size(); ++e)
            REQUIRE(std::abs(rescaled.values[t][e] - k.values[t][e]) < 1e-13);

    KernelC0 uneven = k;
    uneven.values[0][0] += 0.5;
    REQUIRE_THROWS(validate_kernel(uneven));
}

TEST_CASE("convolution: zero noise, impulse response, and support", "[random]") {
    const TorusGrid g(2, 64, 16.0); // h = 0.25, radius 8 cells
    const KernelC0 k = default_bump_kernel(2, g.h());

    WhiteNoiseSample zero = sample_white_noise(g, 1, 1);
    std::fill(zero.values.begin(), zero.values.end(), 0.0);
    const GaussianFieldSample gz = build_gaussian_field(zero, k);
    for (double v : gz.values) REQUIRE(v == 0.0);

    const std::size_t z = g.index({20, 31, 0});
    WhiteNoiseSample imp = zero;
    imp.values[z] = 1.0 / (g.h() * g.h());
    const GaussianFieldSample gi = build_gaussian_field(imp, k);
    const auto zc = g.coords(z);
    for (std::size_t t = 0; t < k.offsets.size(); ++t) {
        const auto& o = k.offsets[t];
        const std::size_t x = g.index({zc[0] + o[0], zc[1] + o[1], zc[2] + o[2]});
        REQUIRE(std::abs(gi.at(0, x) - k.entry(t, 0, 0)) < 1e-12);
    }
    std::size_t nonzero = 0;
    for (std::size_t s = 0; s < g.cells(); ++s) {
        const auto c = g.coords(s);
        int dx = std::abs(c[0] - zc[0]);
        dx = std::min(dx, g.n() - dx);
        int dy = std::abs(c[1] - zc[1]);
        dy = std::min(dy, g.n() - dy);
        if (std::max(dx, dy) > k.radius_cells)
            REQUIRE(gi.at(0, s) == 0.0);
        else if (gi.at(0, s) != 0.0)
            ++nonzero;
    }
    REQUIRE(nonzero > 0);
}

TEST_CASE("fft and direct convolution paths agree", "[random]") {
    const TorusGrid g(2, 64, 16.0);
    const KernelC0 k = default_bump_kernel(2, g.h());
    const WhiteNoiseSample noise = sample_white_noise(g, 1, 33);
    const GaussianFieldSample fft = build_gaussian_field(noise, k, ConvolutionPath::fft);
    const GaussianFieldSample direct = build_gaussian_field(noise, k, ConvolutionPath::direct);
    double scale = 0.0, gap = 0.0;
    for (std::size_t i = 0; i < fft.values.size(); ++i) {
        scale = std::max(scale, std::abs(direct.values[i]));
        gap = std::max(gap, std::abs(fft.values[i] - direct.values[i]));
    }
    REQUIRE(gap < 1e-12 * scale);
}

TEST_CASE("kernel too wide for the torus is rejected", "[random]") {
    const TorusGrid g(2, 16, 2.0); // h = 0.125, radius 16 cells on a 16-cell torus
    const KernelC0 k = default_bump_kernel(2, g.h());
    const WhiteNoiseSample noise = sample_white_noise(g, 1, 5);
    REQUIRE_THROWS(build_gaussian_field(noise, k));
}

TEST_CASE("shift equivariance of the sampling pipeline is bit-exact", "[random]") {
    const TorusGrid g(2, 32, 8.0);
    const KernelC0 k = default_bump_kernel(2, g.h());
    const WhiteNoiseSample noise = sample_white_noise(g, 1, 12);
    WhiteNoiseSample shifted = noise;
    const int v0 = 5, v1 = 11;
    for (std::size_t s = 0; s < g.cells(); ++s) {
        const auto c = g.coords(s);
        shifted.values[g.index({c[0] + v0, c[1] + v1, 0})] = noise.values[s];
    }
    const GaussianFieldSample a = build_gaussian_field(noise, k, ConvolutionPath::direct);
    const GaussianFieldSample b = build_gaussian_field(shifted, k, ConvolutionPath::direct);
    for (std::size_t s = 0; s < g.cells(); ++s) {
        const auto c = g.coords(s);
        REQUIRE(b.at(0, g.index({c[0] + v0, c[1] + v1, 0})) == a.at(0, s));
    }
}

TEST_CASE("empirical field covariance matches the tap-table oracle", "[random]") {
    const TorusGrid g(2, 16, 16.0); // h = 1, radius 2 cells
    const KernelC0 k = default_bump_kernel(2, g.h());

    const std::vector<std::pair<int, int>> lag_list{{0, 0}, {1, 0}, {2, 1}, {3, 0}, {0, 3}};
    const std::size_t samples = 10000;
    std::vector<std::vector<double>> per_seed(lag_list.size(), std::vector<double>(samples, 0.0));
    for (std::size_t i = 0; i < samples; ++i) {
        const WhiteNoiseSample noise = sample_white_noise(g, 1, 50000 + i);
        const GaussianFieldSample field = build_gaussian_field(noise, k);
        for (std::size_t l = 0; l < lag_list.size(); ++l) {
            long double acc = 0.0L;
            for (std::size_t s = 0; s < g.cells(); ++s) {
                const auto c = g.coords(s);
                const std::size_t sl = g.index({c[0] + lag_list[l].first, c[1] + lag_list[l].second, 0});
                acc += static_cast<long double>(field.at(0, s)) * field.at(0, sl);
            }
            per_seed[l][i] = static_cast<double>(acc / static_cast<long double>(g.cells()));
        }
    }

    const KernelCovariance cov = kernel_covariance(k);
    for (std::size_t l = 0; l < lag_list.size(); ++l) {
        const double oracle = direct_lag_covariance(k, lag_list[l].first, lag_list[l].second);
        REQUIRE(std::abs(cov.entry({lag_list[l].first, lag_list[l].second, 0}, 0, 0) - oracle) <
                1e-13 * (1.0 + std::abs(oracle)));
        long double m = 0.0L;
        for (double v : per_seed[l]) m += v;
        const double mean = static_cast<double>(m / static_cast<long double>(samples));
        long double ss = 0.0L;
        for (double v : per_seed[l]) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(static_cast<double>(ss) /
                                    (static_cast<double>(samples) * (samples - 1.0)));
        REQUIRE(std::abs(mean - oracle) <= 5.0 * se + 1e-12);
    }
}

TEST_CASE("coefficient ensemble mean matches Gauss-Hermite quadrature", "[random]") {
    const TorusGrid g(2, 16, 16.0);
    const KernelC0 k = default_bump_kernel(2, g.h());
    CoefficientMapSpec map;
    map.d = 2;

    const double var0 = kernel_covariance(k).entry({0, 0, 0}, 0, 0);
    std::vector<double> nodes, weights;
    gauss_hermite_standard(64, nodes, weights);
    double oracle = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double gval = std::sqrt(var0) * nodes[i];
        oracle += weights[i] * map.apply(&gval)(1, 1);
    }

    const std::size_t seeds = 400;
    std::vector<double> seed_mean(seeds, 0.0);
    for (std::size_t i = 0; i < seeds; ++i) {
        const WhiteNoiseSample noise = sample_white_noise(g, 1, 90000 + i);
        const CoefficientField a = sample_coefficient_field(build_gaussian_field(noise, k), map);
        long double acc = 0.0L;
        for (std::size_t s = 0; s < g.cells(); ++s) acc += a.block(s)[3]; // (1,1) in d=2
        seed_mean[i] = static_cast<double>(acc / static_cast<long double>(g.cells()));
    }
    long double m = 0.0L;
    for (double v : seed_mean) m += v;
    const double mean = static_cast<double>(m / static_cast<long double>(seeds));
    long double ss = 0.0L;
    for (double v : seed_mean) ss += (v - mean) * (v - mean);
    const double se =
        std::sqrt(static_cast<double>(ss) / (static_cast<double>(seeds) * (seeds - 1.0)));
    REQUIRE(std::abs(mean - oracle) <= 5.0 * se + 1e-10);
}

TEST_CASE("sampled coefficients respect the ellipticity contract exactly", "[random]") {
    const TorusGrid g(2, 32, 8.0);
    const KernelC0 k = default_bump_kernel(2, g.h());
    CoefficientMapSpec map;
    map.d = 2;
    map.kind = CoefficientMapSpec::Kind::nonsymmetric_skew;
    const WhiteNoiseSample noise = sample_white_noise(g, 1, 77);
    const CoefficientField a = sample_coefficient_field(build_gaussian_field(noise, k), map);
    REQUIRE(a.certificate().min_sym_eig >= map.lambda - 1e-12);

    std::mt19937 gen(123);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> site(0, g.cells() - 1);
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000000; ++trial) {
        const std::size_t s = site(gen);
        const double x0 = u(gen), x1 = u(gen);
        const double* b = a.block(s);
        const double y0 = b[0] * x0 + b[1] * x1;
        const double y1 = b[2] * x0 + b[3] * x1;
        const double quad = x0 * y0 + x1 * y1;
        const double nx2 = x0 * x0 + x1 * x1;
        if (quad < map.lambda * nx2 - 1e-12) ++violations;
        if (y0 * y0 + y1 * y1 > nx2 * (1.0 + 1e-12)) ++violations;
    }
    REQUIRE(violations == 0);
}
