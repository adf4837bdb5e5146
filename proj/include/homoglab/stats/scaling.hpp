#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace homoglab {

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;          // log y = intercept + slope * log x
    double slope_stderr = 0.0;       // leave-one-point-out jackknife
    std::vector<double> z_scores;    // weighted log-residual per point, input order
    bool monotone = true;            // y monotone along increasing x
};

namespace detail {

struct LineFit {
    double slope = 0.0, intercept = 0.0;
};

inline LineFit weighted_line(const std::vector<double>& lx, const std::vector<double>& ly,
                             const std::vector<double>& w, std::size_t skip) {
    long double sw = 0.0L, sx = 0.0L, sy = 0.0L, sxx = 0.0L, sxy = 0.0L;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        if (i == skip) continue;
        sw += w[i];
        sx += w[i] * lx[i];
        sy += w[i] * ly[i];
        sxx += w[i] * lx[i] * lx[i];
        sxy += w[i] * lx[i] * ly[i];
    }
    const long double det = sw * sxx - sx * sx;
    if (det == 0.0L) throw std::invalid_argument("scaling_fit: degenerate abscissas");
    LineFit out;
    out.slope = static_cast<double>((sw * sxy - sx * sy) / det);
    out.intercept = static_cast<double>((sxx * sy - sx * sxy) / det);
    return out;
}

} // namespace detail

// Weighted least squares on (log x, log y); weights from the delta-method
// log-scale deviations stderr/y when given, unit otherwise. Jackknife drops
// one point at a time, so at least four points are needed for a nonzero
// spread estimate.
inline PowerLawFit scaling_fit(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& y_stderr = {}) {
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("scaling_fit: needs at least 3 points");
    if (y.size() != n) throw std::invalid_argument("scaling_fit: size mismatch");
    if (!y_stderr.empty() && y_stderr.size() != n)
        throw std::invalid_argument("scaling_fit: stderr size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("scaling_fit: non-positive data cannot be log-fit");
        if (!y_stderr.empty() && !(y_stderr[i] > 0.0))
            throw std::invalid_argument("scaling_fit: non-positive stderr");
    }

    std::vector<double> lx(n), ly(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        if (!y_stderr.empty()) {
            const double sl = y_stderr[i] / y[i];
            w[i] = 1.0 / (sl * sl);
        }
    }

    PowerLawFit out;
    const detail::LineFit fit = detail::weighted_line(lx, ly, w, n);
    out.slope = fit.slope;
    out.intercept = fit.intercept;

    out.z_scores.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.z_scores[i] = (ly[i] - (fit.intercept + fit.slope * lx[i])) * std::sqrt(w[i]);

    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i) loo[i] = detail::weighted_line(lx, ly, w, i).slope;
    {
        long double m = 0.0L;
        for (double v : loo) m += v;
        m /= n;
        long double ss = 0.0L;
        for (double v : loo) ss += (v - m) * (v - m);
        out.slope_stderr = std::sqrt(static_cast<double>(ss * (n - 1) / n));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    bool up = true, down = true;
    for (std::size_t i = 1; i < n; ++i) {
        if (y[order[i]] < y[order[i - 1]]) up = false;
        if (y[order[i]] > y[order[i - 1]]) down = false;
    }
    out.monotone = up || down;
    return out;
}

} // namespace homoglab
