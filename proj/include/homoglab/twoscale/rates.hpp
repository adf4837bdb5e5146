#pragma once

#include <cmath>
#include <stdexcept>

namespace homoglab {

// smallest integer >= d/2, the order up to which stationary theory applies
inline int stationary_order(int d) { return (d + 1) / 2; }

// mu_{d,n}(x): 1 below the critical order, sqrt(log) at the critical order in
// even dimension, 1 + sqrt(x) at the critical order in odd dimension
inline double mu_dn(int d, int n, double x) {
    const int ell = stationary_order(d);
    if (n < 0 || n > ell) throw std::invalid_argument("mu_dn: order outside stationary range");
    if (n < ell) return 1.0;
    if (d % 2 == 0) return std::sqrt(std::log(2.0 + std::abs(x)));
    return 1.0 + std::sqrt(std::abs(x));
}

// accuracy prediction eps^n mu_{d,n}(1/eps) for two-scale expansion errors
inline double expansion_rate(int d, int n, double eps) {
    return std::pow(eps, n) * mu_dn(d, n, 1.0 / eps);
}

// variance prediction for smoothed corrector averages: eps^{d-2n} below the
// critical order; at n = ell the even-dimensional case degenerates to the
// logarithmic regime
inline double corrector_average_variance_rate(int d, int n, double eps) {
    const int ell = stationary_order(d);
    if (n < ell) return std::pow(eps, d - 2 * n);
    if (d % 2 == 0) return std::log(2.0 + 1.0 / eps);
    return std::pow(eps, d - 2 * n);
}

} // namespace homoglab
