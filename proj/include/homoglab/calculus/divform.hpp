#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "homoglab/calculus/fft.hpp"
#include "homoglab/calculus/stencils.hpp"
#include "homoglab/core/errors.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/random/coefficient.hpp"

namespace homoglab {

struct SolverReport {
    std::string method;
    std::string preconditioner;
    int iterations = 0;
    double rel_residual = 0.0;
    double tol = 0.0;
    bool converged = false;
};

// Coefficient applied to an edge-represented vector field. Diagonal entries
// multiply the co-located forward edges directly (this is the 1-D "edge
// coefficient"); off-diagonal coupling goes through the edge-to-center
// averaging pair so the operator stays the exact adjoint of its transposed
// coefficient under the single lattice inner product.
inline VectorField apply_flux(const CoefficientField& a, const VectorField& w) {
    const TorusGrid& g = w.grid();
    const int d = g.dim();
    VectorField out(g);
    for (int j = 0; j < d; ++j) {
        const double* wj = w.component(j);
        double* oj = out.component(j);
        for (std::size_t s = 0; s < g.cells(); ++s) oj[s] = a.block(s)[j * d + j] * wj[s];
    }
    if (d == 1) return out;
    // centered components
    std::vector<std::vector<double>> centered(static_cast<std::size_t>(d));
    for (int l = 0; l < d; ++l) {
        centered[static_cast<std::size_t>(l)].resize(g.cells());
        avg_edge_to_center(g, l, w.component(l), centered[static_cast<std::size_t>(l)].data());
    }
    std::vector<double> acc(g.cells());
    std::vector<double> edge(g.cells());
    for (int j = 0; j < d; ++j) {
        bool any = false;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int l = 0; l < d; ++l) {
            if (l == j) continue;
            const double* c = centered[static_cast<std::size_t>(l)].data();
            for (std::size_t s = 0; s < g.cells(); ++s) {
                const double alj = a.block(s)[j * d + l];
                if (alj != 0.0) {
                    acc[s] += alj * c[s];
                    any = true;
                }
            }
        }
        if (!any) continue;
        avg_center_to_edge(g, j, acc.data(), edge.data());
        double* oj = out.component(j);
        for (std::size_t s = 0; s < g.cells(); ++s) oj[s] += edge[s];
    }
    return out;
}

// A u = -div(flux_a(grad u)) at the given spacing.
inline ScalarField apply_divform_operator(const CoefficientField& a, const ScalarField& u, double spacing) {
    VectorField f = apply_flux(a, gradient(u, spacing));
    ScalarField out = divergence(f, spacing);
    for (std::size_t s = 0; s < u.grid().cells(); ++s) out[s] = -out[s];
    return out;
}

// Which constant-coefficient stencil a spectral solve inverts: the
// edge-averaged flux (what apply_flux reduces to for constant coefficients)
// or the plain pointwise product (what the homogenized cascade uses).
enum class ConstantFlux { edge_averaged, pointwise };

// Constant-coefficient inverse by the exact discrete symbol; also used as the
// CG/BiCGStab preconditioner with the diagonal of the symmetric mean of a.
class ConstantDivFormSolver {
public:
    ConstantDivFormSolver(const TorusGrid& g, const Mat& m, double spacing,
                          ConstantFlux kind = ConstantFlux::edge_averaged)
        : ws_(g), m_(m), spacing_(spacing) {
        symbol_.resize(ws_.complex_size());
        for (std::size_t i = 0; i < ws_.complex_size(); ++i) {
            const auto k = ws_.freq(i);
            symbol_[i] = (kind == ConstantFlux::edge_averaged) ? divform_symbol(m, k, g.n(), spacing)
                                                               : constant_symbol(m, k, g.n(), spacing);
        }
    }

    const Mat& coefficient() const { return m_; }

    // solves A u = rhs (rhs zero-mean), returns zero-mean u
    ScalarField solve(const ScalarField& rhs) {
        const TorusGrid& g = ws_.grid();
        double* r = ws_.real_buffer();
        for (std::size_t s = 0; s < g.cells(); ++s) r[s] = rhs[s];
        ws_.forward();
        auto* spec = ws_.spectral_buffer();
        for (std::size_t i = 0; i < ws_.complex_size(); ++i) {
            spec[i] = (std::abs(symbol_[i]) == 0.0) ? 0.0 : spec[i] / symbol_[i];
        }
        ws_.backward();
        ScalarField u(g);
        for (std::size_t s = 0; s < g.cells(); ++s) u[s] = r[s];
        u.subtract_mean();
        return u;
    }

private:
    SpectralWorkspace ws_;
    Mat m_;
    double spacing_;
    std::vector<std::complex<double>> symbol_;
};

namespace detail {

inline double dot_plain(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm_plain(const std::vector<double>& x) { return std::sqrt(dot_plain(x, x)); }

// exact periodic integration for d = 1: a u' + F = const on every edge
inline ScalarField solve_divform_1d(const CoefficientField& a, const VectorField& f, double spacing,
                                    SolverReport* report) {
    const TorusGrid& g = f.grid();
    double sum_inv = 0.0, sum_f_over_a = 0.0;
    for (std::size_t s = 0; s < g.cells(); ++s) {
        const double av = a.block(s)[0];
        sum_inv += 1.0 / av;
        sum_f_over_a += f.at(0, s) / av;
    }
    const double c = sum_f_over_a / sum_inv;
    ScalarField u(g);
    double run = 0.0;
    // sites are laid out in order along the line, so a prefix sum integrates u'
    for (std::size_t s = 0; s + 1 < g.cells(); ++s) {
        run += spacing * (c - f.at(0, s)) / a.block(s)[0];
        u[s + 1] = run;
    }
    u.subtract_mean();
    if (report) {
        report->method = "direct-1d";
        report->preconditioner = "none";
        report->iterations = 0;
        report->converged = true;
    }
    return u;
}

} // namespace detail

// Solves -div(a grad u) = div f on the torus, returning zero-mean u with
// ||div(a grad u + f)||_2 <= tol * ||div f||_2. Symmetric coefficients use
// preconditioned CG; a skew part switches to preconditioned BiCGStab (CG
// requires a symmetric operator). d = 1 integrates the two-point flux
// constancy exactly.
inline ScalarField solve_divform(const CoefficientField& a, const VectorField& f, double tol,
                                 double spacing, SolverReport* report = nullptr,
                                 int max_iterations = 20000) {
    const TorusGrid& g = f.grid();
    if (a.grid() != g) throw std::invalid_argument("solve_divform: coefficient and rhs grids differ");
    if (a.certificate().waived)
        throw solver_error("solve_divform: coefficient field carries no ellipticity certificate (test-only map)");
    SolverReport local;
    SolverReport& rep = report ? *report : local;
    rep.tol = tol;

    if (g.dim() == 1) {
        ScalarField u = detail::solve_divform_1d(a, f, spacing, &rep);
        ScalarField resid = divergence(apply_flux(a, gradient(u, spacing)), spacing);
        const ScalarField divf = divergence(f, spacing);
        double num = 0.0, den = 0.0;
        for (std::size_t s = 0; s < g.cells(); ++s) {
            const double r = resid[s] + divf[s];
            num += r * r;
            den += divf[s] * divf[s];
        }
        rep.rel_residual = (den == 0.0) ? 0.0 : std::sqrt(num / den);
        return u;
    }

    ScalarField b = divergence(f, spacing);
    const std::size_t n = g.cells();
    std::vector<double> bv(n);
    for (std::size_t s = 0; s < n; ++s) bv[s] = b[s];
    {
        // div of a periodic field is zero-mean up to roundoff; remove the dust
        double m = 0.0;
        for (double x : bv) m += x;
        m /= static_cast<double>(n);
        for (double& x : bv) x -= m;
    }
    const double bnorm = detail::norm_plain(bv);
    ScalarField u(g);
    if (bnorm == 0.0) {
        rep.method = a.is_symmetric() ? "pcg" : "bicgstab";
        rep.preconditioner = "fft-mean";
        rep.iterations = 0;
        rep.converged = true;
        rep.rel_residual = 0.0;
        return u;
    }

    // preconditioner: diagonal of the symmetric part of the spatial mean of a
    Mat mean = Mat::zero(g.dim());
    for (std::size_t s = 0; s < n; ++s) {
        const double* blk = a.block(s);
        for (int i = 0; i < g.dim(); ++i) mean(i, i) += blk[i * g.dim() + i];
    }
    mean *= 1.0 / static_cast<double>(n);
    ConstantDivFormSolver precond(g, mean, spacing);

    auto apply_A = [&](const std::vector<double>& x, std::vector<double>& out) {
        ScalarField xu(g);
        for (std::size_t s = 0; s < n; ++s) xu[s] = x[s];
        ScalarField ax = apply_divform_operator(a, xu, spacing);
        for (std::size_t s = 0; s < n; ++s) out[s] = ax[s];
    };
    auto apply_M = [&](const std::vector<double>& x, std::vector<double>& out) {
        ScalarField xu(g);
        for (std::size_t s = 0; s < n; ++s) xu[s] = x[s];
        ScalarField z = precond.solve(xu);
        for (std::size_t s = 0; s < n; ++s) out[s] = z[s];
    };

    std::vector<double> x(n, 0.0);
    std::vector<double> residual_trace;
    bool converged = false;
    int iterations = 0;
    double final_rel = 0.0;

    if (a.is_symmetric()) {
        rep.method = "pcg";
        std::vector<double> r = bv, z(n), p(n), q(n);
        apply_M(r, z);
        p = z;
        double rz = detail::dot_plain(r, z);
        for (int it = 0; it < max_iterations; ++it) {
            apply_A(p, q);
            const double pq = detail::dot_plain(p, q);
            if (pq <= 0.0) throw solver_error("solve_divform: CG broke down (operator not positive definite)");
            const double alpha = rz / pq;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            const double rel = detail::norm_plain(r) / bnorm;
            iterations = it + 1;
            final_rel = rel;
            residual_trace.push_back(rel);
            if (rel <= tol) {
                converged = true;
                break;
            }
            apply_M(r, z);
            const double rz_new = detail::dot_plain(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
    } else {
        rep.method = "bicgstab";
        std::vector<double> r = bv, rhat = bv, p(n, 0.0), v(n, 0.0);
        std::vector<double> phat(n), shat(n), s(n), t(n);
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        for (int it = 0; it < max_iterations; ++it) {
            const double rho_new = detail::dot_plain(rhat, r);
            if (rho_new == 0.0) throw solver_error("solve_divform: BiCGStab breakdown (rho = 0)");
            if (it == 0) {
                p = r;
            } else {
                const double beta = (rho_new / rho) * (alpha / omega);
                for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            rho = rho_new;
            apply_M(p, phat);
            apply_A(phat, v);
            alpha = rho / detail::dot_plain(rhat, v);
            for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
            double rel = detail::norm_plain(s) / bnorm;
            iterations = it + 1;
            if (rel <= tol) {
                for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i];
                final_rel = rel;
                residual_trace.push_back(rel);
                converged = true;
                break;
            }
            apply_M(s, shat);
            apply_A(shat, t);
            const double tt = detail::dot_plain(t, t);
            if (tt == 0.0) throw solver_error("solve_divform: BiCGStab breakdown (t = 0)");
            omega = detail::dot_plain(t, s) / tt;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
            rel = detail::norm_plain(r) / bnorm;
            final_rel = rel;
            residual_trace.push_back(rel);
            if (rel <= tol) {
                converged = true;
                break;
            }
            if (omega == 0.0) throw solver_error("solve_divform: BiCGStab breakdown (omega = 0)");
        }
    }

    if (!converged) {
        std::string trace;
        const std::size_t m = residual_trace.size();
        for (std::size_t i = (m > 6 ? m - 6 : 0); i < m; ++i) {
            char buf[40];
            std::snprintf(buf, sizeof buf, " %.3e", residual_trace[i]);
            trace += buf;
        }
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "solve_divform: %s did not reach tol %.3e in %d iterations; residual tail:%s",
                      rep.method.c_str(), tol, max_iterations, trace.c_str());
        throw solver_error(buf);
    }

    rep.preconditioner = "fft-mean";
    rep.iterations = iterations;
    rep.rel_residual = final_rel;
    rep.converged = true;
    for (std::size_t s = 0; s < n; ++s) u[s] = x[s];
    u.subtract_mean();
    return u;
}

} // namespace homoglab
