// Builds one coefficient sample on a small torus, assembles the first two
// corrector levels, and prints the homogenized tensor with its residuals.

#include <iostream>

#include "homoglab/homoglab.hpp"

using namespace homoglab;

int main() {
    const TorusGrid grid(2, 64, 8.0);
    const KernelC0 kernel = default_bump_kernel(2, grid.h());
    const WhiteNoiseSample noise = sample_white_noise(grid, 1, 42);
    const GaussianFieldSample field = build_gaussian_field(noise, kernel);

    CoefficientMapSpec map;
    map.d = 2;
    const CoefficientField a = sample_coefficient_field(field, map);

    const CorrectorSet set = build_hierarchy(a, 2, 1e-10);
    const Mat abar1 = set.abar1();

    std::cout << "abar1 =\n";
    for (int i = 0; i < 2; ++i)
        std::cout << "  " << abar1(i, 0) << "  " << abar1(i, 1) << "\n";

    for (int n = 1; n <= set.max_order(); ++n) {
        const CorrectorLevel& lv = set.level(n);
        double eq = 0.0, qmean = 0.0;
        for (std::size_t t = 0; t < lv.tuples.size(); ++t) {
            eq = std::max(eq, lv.reports[t].rel_residual);
            qmean = std::max(qmean, lv.q_mean_abs[t]);
        }
        std::cout << "level " << n << ": " << lv.tuples.size() << " tuples, solver residual "
                  << eq << ", flux mean " << qmean << "\n";
    }

    const FourierPoly w = default_scalar_probe(2, 0);
    const LinkIdentityReport link = link_identity(set, w, 2, grid.eps());
    std::cout << "two-scale link residual (n=2): " << link.algebraic_rel << "\n";
    return 0;
}
