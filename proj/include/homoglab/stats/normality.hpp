#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace homoglab {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// rational initial guess (Acklam's coefficients) polished with one Halley
// step through the exact erfc-based cdf
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[4] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e / normal_pdf(x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

struct NormalityMetrics {
    int samples = 0;
    double ks = 0.0;               // Kolmogorov-Smirnov vs standard normal
    double w2 = 0.0;               // empirical 2-Wasserstein vs standard normal
    double skewness = 0.0;
    double skewness_stderr = 0.0;  // null stderr at this sample size
    double excess_kurtosis = 0.0;
    double kurtosis_stderr = 0.0;
    std::string tv = "not-applicable"; // total variation is not estimable here
};

// Standardizes the samples, then compares against the standard normal: KS on
// the empirical CDF, W2 through sorted samples at the (k - 1/2)/n plotting
// positions, and moment-based shape statistics with their null errors.
inline NormalityMetrics normality_metrics(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n < 100) throw std::invalid_argument("normality_metrics: needs at least 100 samples");

    long double sum = 0.0L;
    for (double v : samples) sum += v;
    const double mean = static_cast<double>(sum / n);
    long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L, ss = 0.0L;
    for (double v : samples) {
        const long double cc = v - mean;
        m2 += cc * cc;
        m3 += cc * cc * cc;
        m4 += cc * cc * cc * cc;
        ss += cc * cc;
    }
    const double var_unbiased = static_cast<double>(ss / (n - 1));
    if (var_unbiased <= 0.0) throw std::invalid_argument("normality_metrics: degenerate variance");
    m2 /= n;
    m3 /= n;
    m4 /= n;

    NormalityMetrics out;
    out.samples = static_cast<int>(n);
    out.skewness = static_cast<double>(m3 / std::pow(static_cast<double>(m2), 1.5));
    out.excess_kurtosis = static_cast<double>(m4 / (m2 * m2)) - 3.0;
    const double nd = static_cast<double>(n);
    out.skewness_stderr = std::sqrt(6.0 * nd * (nd - 1.0) / ((nd - 2.0) * (nd + 1.0) * (nd + 3.0)));
    out.kurtosis_stderr = 2.0 * out.skewness_stderr * std::sqrt((nd * nd - 1.0) / ((nd - 3.0) * (nd + 5.0)));

    std::vector<double> z(samples);
    const double sd = std::sqrt(var_unbiased);
    for (double& v : z) v = (v - mean) / sd;
    std::sort(z.begin(), z.end());

    double ks = 0.0;
    long double w2 = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = normal_cdf(z[i]);
        ks = std::max(ks, std::max(cdf - static_cast<double>(i) / nd, static_cast<double>(i + 1) / nd - cdf));
        const double q = normal_quantile((static_cast<double>(i) + 0.5) / nd);
        w2 += static_cast<long double>(z[i] - q) * (z[i] - q);
    }
    out.ks = ks;
    out.w2 = std::sqrt(static_cast<double>(w2 / static_cast<long double>(n)));
    return out;
}

} // namespace homoglab
