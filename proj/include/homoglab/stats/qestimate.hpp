#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homoglab/core/errors.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/core/grid.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// one calibration point for the leading covariance tensor: a test pair
// (g, w) and the measured variance of the rescaled commutator observable
struct QProbe {
    FourierVectorPoly g;
    FourierPoly w;
    double variance = 0.0;
    double variance_stderr = 0.0;

    QProbe(FourierVectorPoly gg, FourierPoly ww) : g(std::move(gg)), w(std::move(ww)) {}
};

// leading-order quartic form: variance ~ sum_{ijkl} Q[ijkl] int g_i d_j w g_k d_l w,
// symmetric under swapping the (i,j) and (k,l) slots by construction
struct QEstimate {
    int d = 0;
    std::vector<double> q;            // flattened d^4, slot-swap symmetric
    double fit_residual = 0.0;        // rms defect of the fitted probes
    double condition_number = 0.0;    // of the weighted design matrix
    double cv_gap = 0.0;              // max held-out defect over (stderr + rms)
    int probes = 0;

    double entry(int i, int j, int k, int l) const {
        const std::size_t du = static_cast<std::size_t>(d);
        return q[((static_cast<std::size_t>(i) * du + static_cast<std::size_t>(j)) * du +
                  static_cast<std::size_t>(k)) * du + static_cast<std::size_t>(l)];
    }
};

namespace detail {

// per-probe design row over the upper-triangle unknowns (alpha <= beta),
// alpha = (i, j) flattened; off-diagonal unknowns carry the factor 2
inline std::vector<double> q_design_row(const QProbe& probe, const TorusGrid& grid) {
    const int d = grid.dim();
    const int pairs = d * d;
    std::vector<ScalarField> v;
    v.reserve(static_cast<std::size_t>(pairs));
    std::vector<ScalarField> gs, dw;
    for (int i = 0; i < d; ++i) gs.push_back(probe.g.comp[static_cast<std::size_t>(i)].sample(grid));
    for (int j = 0; j < d; ++j) dw.push_back(probe.w.sample_derivative(grid, IndexTuple{j}));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            ScalarField prod(grid);
            for (std::size_t s = 0; s < grid.cells(); ++s)
                prod[s] = gs[static_cast<std::size_t>(i)][s] * dw[static_cast<std::size_t>(j)][s];
            v.push_back(std::move(prod));
        }
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(pairs * (pairs + 1) / 2));
    for (int a = 0; a < pairs; ++a)
        for (int b = a; b < pairs; ++b) {
            long double acc = 0.0L;
            const ScalarField& va = v[static_cast<std::size_t>(a)];
            const ScalarField& vb = v[static_cast<std::size_t>(b)];
            for (std::size_t s = 0; s < grid.cells(); ++s)
                acc += static_cast<long double>(va[s]) * vb[s];
            const double integral = static_cast<double>(acc / static_cast<long double>(grid.cells()));
            row.push_back(a == b ? integral : 2.0 * integral);
        }
    return row;
}

} // namespace detail

// Weighted least squares for the symmetric quartic form; probes with
// reported stderr are weighted by it. Held-out validation refits with each
// probe removed and records the worst normalized prediction gap.
inline QEstimate estimate_Q_leading(const std::vector<QProbe>& probes, const TorusGrid& grid,
                                    double condition_threshold = 1e8) {
    const int d = grid.dim();
    const int pairs = d * d;
    const int unknowns = pairs * (pairs + 1) / 2;
    const int m = static_cast<int>(probes.size());
    if (m < unknowns)
        throw std::invalid_argument("estimate_Q_leading: fewer probes than unknowns");

    bool weighted = true;
    for (const QProbe& p : probes) weighted = weighted && p.variance_stderr > 0.0;

    Eigen::MatrixXd design(m, unknowns);
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
        const std::vector<double> row = detail::q_design_row(probes[static_cast<std::size_t>(i)], grid);
        const double w = weighted ? 1.0 / probes[static_cast<std::size_t>(i)].variance_stderr : 1.0;
        for (int c = 0; c < unknowns; ++c) design(i, c) = w * row[static_cast<std::size_t>(c)];
        rhs(i) = w * probes[static_cast<std::size_t>(i)].variance;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond < condition_threshold))
        throw solver_error("estimate_Q_leading: design matrix condition number " + std::to_string(cond) +
                           " exceeds threshold; enlarge or diversify the probe set");
    const Eigen::VectorXd sol = svd.solve(rhs);

    QEstimate out;
    out.d = d;
    out.probes = m;
    out.condition_number = cond;
    out.q.assign(static_cast<std::size_t>(pairs) * static_cast<std::size_t>(pairs), 0.0);
    {
        int c = 0;
        for (int a = 0; a < pairs; ++a)
            for (int b = a; b < pairs; ++b, ++c) {
                out.q[static_cast<std::size_t>(a) * static_cast<std::size_t>(pairs) + static_cast<std::size_t>(b)] = sol(c);
                out.q[static_cast<std::size_t>(b) * static_cast<std::size_t>(pairs) + static_cast<std::size_t>(a)] = sol(c);
            }
    }

    // rms defect in variance units (unweighted)
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(m));
    for (const QProbe& p : probes) rows.push_back(detail::q_design_row(p, grid));
    long double ssq = 0.0L;
    for (int i = 0; i < m; ++i) {
        long double pred = 0.0L;
        int c = 0;
        for (int a = 0; a < pairs; ++a)
            for (int b = a; b < pairs; ++b, ++c)
                pred += static_cast<long double>(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]) * sol(c);
        const long double defect = pred - probes[static_cast<std::size_t>(i)].variance;
        ssq += defect * defect;
    }
    out.fit_residual = std::sqrt(static_cast<double>(ssq / m));

    if (m > unknowns) {
        double worst = 0.0;
        for (int held = 0; held < m; ++held) {
            Eigen::MatrixXd dsub(m - 1, unknowns);
            Eigen::VectorXd rsub(m - 1);
            int r = 0;
            for (int i = 0; i < m; ++i) {
                if (i == held) continue;
                const double w = weighted ? 1.0 / probes[static_cast<std::size_t>(i)].variance_stderr : 1.0;
                for (int c = 0; c < unknowns; ++c)
                    dsub(r, c) = w * rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
                rsub(r) = w * probes[static_cast<std::size_t>(i)].variance;
                ++r;
            }
            const Eigen::VectorXd qsub =
                dsub.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rsub);
            long double pred = 0.0L;
            for (int c = 0; c < unknowns; ++c)
                pred += static_cast<long double>(rows[static_cast<std::size_t>(held)][static_cast<std::size_t>(c)]) * qsub(c);
            const double scale = probes[static_cast<std::size_t>(held)].variance_stderr + out.fit_residual;
            const double gap = std::abs(static_cast<double>(pred) - probes[static_cast<std::size_t>(held)].variance);
            worst = std::max(worst, scale > 0.0 ? gap / scale : gap);
        }
        out.cv_gap = worst;
    }
    return out;
}

// Deterministic low-frequency probe family. Waves rotate through a small
// pool and phases walk the golden angle, which keeps the design rows away
// from each other; the condition number is still checked at fit time.
inline std::vector<QProbe> default_q_probes(int d, int count) {
    if (count < 1) throw std::invalid_argument("default_q_probes: count must be positive");
    static const std::array<FourierPoly::Wave, 5> pool{
        {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}, {2, 1, 0}}};
    const double golden = 2.399963229728653;
    std::vector<QProbe> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int p = 0; p < count; ++p) {
        FourierVectorPoly g(d);
        for (int c = 0; c < d; ++c) {
            FourierPoly::Wave k1 = pool[static_cast<std::size_t>((p + c) % 5)];
            FourierPoly::Wave k2 = pool[static_cast<std::size_t>((p + c + 2) % 5)];
            if (d == 1) k1 = k2 = FourierPoly::Wave{1, 0, 0};
            g.comp[static_cast<std::size_t>(c)].add_cosine(
                k1, 1.0 - 0.13 * c + 0.07 * (p % 3), golden * (p + 1) + 0.4 * c);
            g.comp[static_cast<std::size_t>(c)].add_cosine(
                k2, 0.6 + 0.11 * ((p + c) % 4), golden * (2 * p + c) + 1.1);
        }
        FourierPoly w(d);
        FourierPoly::Wave m1 = pool[static_cast<std::size_t>((p + 1) % 5)];
        FourierPoly::Wave m2 = pool[static_cast<std::size_t>((p + 3) % 5)];
        if (d == 1) m1 = m2 = FourierPoly::Wave{1, 0, 0};
        w.add_cosine(m1, 1.0 + 0.09 * (p % 4), golden * (3 * p + 1));
        if (d > 1) w.add_cosine(m2, 0.8 - 0.05 * (p % 5), golden * (p + 2) + 0.7);
        out.emplace_back(std::move(g), std::move(w));
    }
    return out;
}

} // namespace homoglab
