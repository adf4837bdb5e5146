#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace homoglab {

// N_p = E[|X - EX|^p]^{1/p} for p in {1, 2, 4}, with leave-one-out jackknife
// errors on everything. The variance field is the unbiased estimator; N_2
// is its square root.
struct MomentStats {
    int samples = 0;
    double mean = 0.0;
    double mean_stderr = 0.0;
    double variance = 0.0;
    double variance_stderr = 0.0;
    double n1 = 0.0;
    double n1_stderr = 0.0;
    double n2 = 0.0;
    double n2_stderr = 0.0;
    double n4 = 0.0;
    double n4_stderr = 0.0;
};

namespace detail {

inline double jackknife_stderr(const std::vector<double>& loo) {
    const std::size_t n = loo.size();
    long double m = 0.0L;
    for (double v : loo) m += v;
    m /= n;
    long double ss = 0.0L;
    for (double v : loo) ss += (v - m) * (v - m);
    return std::sqrt(static_cast<double>(ss * (n - 1) / n));
}

struct CenteredMoments {
    double n1 = 0.0, var = 0.0, n4 = 0.0;
};

// centered absolute moments of the values excluding index `skip` (pass the
// sample count as `skip` to use everything)
inline CenteredMoments centered_moments(const std::vector<double>& x, std::size_t skip) {
    const std::size_t n = x.size() - (skip < x.size() ? 1 : 0);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (i != skip) sum += x[i];
    const long double m = sum / n;
    long double a1 = 0.0L, a2 = 0.0L, a4 = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i == skip) continue;
        const long double c = x[i] - m;
        const long double c2 = c * c;
        a1 += c < 0 ? -c : c;
        a2 += c2;
        a4 += c2 * c2;
    }
    CenteredMoments out;
    out.n1 = static_cast<double>(a1 / n);
    out.var = n > 1 ? static_cast<double>(a2 / (n - 1)) : 0.0;
    out.n4 = static_cast<double>(a4 / n);
    return out;
}

} // namespace detail

inline MomentStats moment_stats(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n < 30) throw std::invalid_argument("moment_stats: needs at least 30 samples");

    MomentStats out;
    out.samples = static_cast<int>(n);

    const detail::CenteredMoments full = detail::centered_moments(samples, n);
    long double sum = 0.0L;
    for (double v : samples) sum += v;
    out.mean = static_cast<double>(sum / n);
    out.variance = full.var;
    out.n1 = full.n1;
    out.n2 = std::sqrt(full.var);
    out.n4 = std::pow(full.n4, 0.25);
    out.mean_stderr = std::sqrt(full.var / n);

    std::vector<double> lvar(n), ln1(n), ln2(n), ln4(n);
    for (std::size_t i = 0; i < n; ++i) {
        const detail::CenteredMoments loo = detail::centered_moments(samples, i);
        lvar[i] = loo.var;
        ln1[i] = loo.n1;
        ln2[i] = std::sqrt(loo.var);
        ln4[i] = std::pow(loo.n4, 0.25);
    }
    out.variance_stderr = detail::jackknife_stderr(lvar);
    out.n1_stderr = detail::jackknife_stderr(ln1);
    out.n2_stderr = detail::jackknife_stderr(ln2);
    out.n4_stderr = detail::jackknife_stderr(ln4);
    return out;
}

} // namespace homoglab
