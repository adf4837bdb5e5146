#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"

#include "homoglab/random/gaussian_rng.hpp"
#include "homoglab/stats/moments.hpp"
#include "homoglab/stats/normality.hpp"
#include "homoglab/stats/qestimate.hpp"
#include "homoglab/stats/scaling.hpp"

using namespace homoglab;

TEST_CASE("power-law fits recover exact exponents", "[stats]") {
    const std::vector<double> x{0.5, 0.25, 0.125, 0.0625, 0.03125};
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.7 * std::pow(x[i], 1.37);
    const PowerLawFit fit = scaling_fit(x, y);
    REQUIRE(std::abs(fit.slope - 1.37) < 1e-12);
    REQUIRE(std::abs(fit.intercept - std::log(2.7)) < 1e-12);
    REQUIRE(fit.monotone);
    for (double z : fit.z_scores) REQUIRE(std::abs(z) < 1e-10);

    // multiplicative noise with honest weights keeps the slope in band
    GaussianRng rng(99);
    std::vector<double> yn(y), se(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        yn[i] = y[i] * std::exp(0.01 * rng.normal());
        se[i] = 0.01 * yn[i];
    }
    const PowerLawFit noisy = scaling_fit(x, yn, se);
    REQUIRE(std::abs(noisy.slope - 1.37) < 0.05);
    REQUIRE(noisy.slope_stderr > 0.0);

    const PowerLawFit bumpy = scaling_fit({1.0, 2.0, 3.0}, {1.0, 2.0, 1.5});
    REQUIRE_FALSE(bumpy.monotone);

    REQUIRE_THROWS_AS(scaling_fit({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(scaling_fit({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(scaling_fit({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {0.1, 0.0, 0.1}),
                      std::invalid_argument);
}

TEST_CASE("normality metrics separate gaussian from exponential samples", "[stats]") {
    GaussianRng rng(4242);
    std::vector<double> gauss(500);
    for (double& v : gauss) v = 0.7 + 1.9 * rng.normal();
    const NormalityMetrics ok = normality_metrics(gauss);
    REQUIRE(ok.samples == 500);
    REQUIRE(ok.ks < 0.08);
    REQUIRE(ok.w2 < 0.15);
    REQUIRE(std::abs(ok.skewness) < 5.0 * ok.skewness_stderr);
    REQUIRE(std::abs(ok.excess_kurtosis) < 5.0 * ok.kurtosis_stderr);

    std::vector<double> expo(500);
    for (double& v : expo) v = -std::log(rng.uniform01());
    const NormalityMetrics bad = normality_metrics(expo);
    REQUIRE(bad.ks > 0.1);
    REQUIRE(bad.skewness > 1.0);

    REQUIRE_THROWS_AS(normality_metrics(std::vector<double>(50, 0.0)), std::invalid_argument);
    REQUIRE_THROWS_AS(normality_metrics(std::vector<double>(200, 1.0)), std::invalid_argument);
}

TEST_CASE("normal quantile inverts the cdf across the support", "[stats]") {
    for (double p : {1e-6, 1e-3, 0.02, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-6}) {
        const double q = normal_quantile(p);
        REQUIRE(std::abs(normal_cdf(q) - p) < 1e-12 * std::max(p, 1.0 - p) + 1e-15);
        REQUIRE(std::abs(q + normal_quantile(1.0 - p)) < 1e-9 * (1.0 + std::abs(q)));
    }
    REQUIRE(std::abs(normal_quantile(0.5)) < 1e-15);
    REQUIRE_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("moment statistics match gaussian targets within jackknife bands", "[stats]") {
    GaussianRng rng(777);
    const double mu = 0.3, sd = 2.0;
    std::vector<double> x(400);
    for (double& v : x) v = mu + sd * rng.normal();
    const MomentStats m = moment_stats(x);
    REQUIRE(m.samples == 400);
    REQUIRE(std::abs(m.mean - mu) < 5.0 * m.mean_stderr);
    REQUIRE(std::abs(m.variance - sd * sd) < 5.0 * m.variance_stderr);
    REQUIRE(std::abs(m.n2 - sd) < 5.0 * m.n2_stderr);
    REQUIRE(std::abs(m.n1 - sd * std::sqrt(2.0 / M_PI)) < 5.0 * m.n1_stderr);
    REQUIRE(std::abs(m.n4 - sd * std::pow(3.0, 0.25)) < 5.0 * m.n4_stderr);

    REQUIRE_THROWS_AS(moment_stats(std::vector<double>(29, 1.0)), std::invalid_argument);
}

TEST_CASE("the leading covariance tensor is recovered from consistent variances", "[stats]") {
    const TorusGrid grid(2, 32, 8.0);
    std::vector<QProbe> probes = default_q_probes(2, 14);

    // slot-swap symmetric target over the 4 flattened (i,j) pairs
    const double S[4][4] = {{2.0, 0.3, -0.4, 0.1},
                            {0.3, 1.5, 0.2, -0.2},
                            {-0.4, 0.2, 1.1, 0.05},
                            {0.1, -0.2, 0.05, 0.9}};

    for (QProbe& p : probes) {
        std::vector<ScalarField> v;
        for (int i = 0; i < 2; ++i) {
            const ScalarField gi = p.g.comp[static_cast<std::size_t>(i)].sample(grid);
            for (int j = 0; j < 2; ++j) {
                const ScalarField dj = p.w.sample_derivative(grid, IndexTuple{j});
                ScalarField prod(grid);
                for (std::size_t s = 0; s < grid.cells(); ++s) prod[s] = gi[s] * dj[s];
                v.push_back(std::move(prod));
            }
        }
        long double var = 0.0L;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                var += S[a][b] * average_dot(v[static_cast<std::size_t>(a)], v[static_cast<std::size_t>(b)]);
        p.variance = static_cast<double>(var);
        p.variance_stderr = 1e-6;
    }

    const QEstimate est = estimate_Q_leading(probes, grid);
    REQUIRE(est.probes == 14);
    REQUIRE(est.condition_number < 1e6);
    REQUIRE(est.fit_residual < 1e-8);
    REQUIRE(est.cv_gap < 0.01);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    REQUIRE(std::abs(est.entry(i, j, k, l) - S[i * 2 + j][k * 2 + l]) < 1e-6);

    REQUIRE_THROWS_AS(estimate_Q_leading(default_q_probes(2, 9), grid), std::invalid_argument);
}
