#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "homoglab/calculus/stencils.hpp"
#include "homoglab/commutators/commutator.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/core/multiindex.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/twoscale/expansion.hpp"
#include "homoglab/twoscale/testfn.hpp"

namespace homoglab {

// standard commutator output tagged with the construction that produced it
struct StandardCommutatorField {
    int order = 0;
    double eps = 0.0;
    std::string construction; // "explicit-formula" or "taylor-definition"
    VectorField values;
};

// Xi°^n[grad w] as an explicit field: Xi^n applied to the two-scale gradient
// E^n[grad w], plus the symmetrized abar^{k+1} correction sums that trade the
// frozen Taylor data for the smoothly varying profile. Correction term for
// (k, s, l): eps^{k+s} C(k, l) Sym(abar^{k+1}) contracted against l forward
// differences of the order-(s+1) corrector block and the analytic derivative
// of w over the remaining k - l block indices and the s + 1 block tuple.
inline VectorField standard_commutator_explicit(const CoefficientField& a, const CorrectorSet& set,
                                                const AbarTensors& abar, const FourierPoly& w,
                                                int n, double eps) {
    const TorusGrid& g = set.grid;
    const int d = g.dim();
    if (n < 1) throw std::invalid_argument("standard_commutator_explicit: order must be >= 1");
    if (n > set.max_order() || n > abar.max_order)
        throw std::invalid_argument("standard_commutator_explicit: order exceeds hierarchy");
    const double mac = 1.0 / g.n();

    VectorField out = commutator(a, abar, two_scale_E(set, w, n, eps), n, eps);

    for (int s = 1; s < n; ++s) {
        // corrector blocks for the (s+1)-tuples, shared across k and l
        const std::vector<IndexTuple> tuples_j = enumerate_tuples(d, s + 1);
        std::vector<VectorField> blocks;
        blocks.reserve(tuples_j.size());
        for (const IndexTuple& tj : tuples_j) blocks.push_back(corrector_block(set, tj));

        for (int k = 1; k < n; ++k) {
            const int lmax = k + s - n;
            if (lmax < 0) continue;
            const double eks = std::pow(eps, k + s);

            for (const IndexTuple& ti : enumerate_tuples(d, k)) {
                // Sym over the k block indices with the row and contraction
                // slots held fixed; skip tuples whose symmetrization vanishes
                std::array<std::array<double, 3>, 3> sym{};
                bool any = false;
                for (int c = 0; c < d; ++c)
                    for (int j = 0; j < d; ++j) {
                        const double v = symmetrize_over(ti, [&](const IndexTuple& p) {
                            IndexTuple full = p;
                            full.push_back(c);
                            return abar.entry(k + 1, j, full);
                        });
                        sym[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] = v;
                        any = any || v != 0.0;
                    }
                if (!any) continue;

                for (int l = 0; l <= lmax; ++l) {
                    IndexTuple dw(ti.begin() + l, ti.end());
                    for (const IndexTuple& tj : tuples_j) {
                        IndexTuple dirs = dw;
                        dirs.insert(dirs.end(), tj.begin(), tj.end());
                        const ScalarField der = w.sample_derivative(g, dirs);
                        const VectorField& block = blocks[tuple_rank(d, tj)];
                        const double coeff = eks * binomial(k, l);
                        const IndexTuple dl(ti.begin(), ti.begin() + l);
                        for (int c = 0; c < d; ++c) {
                            bool used = false;
                            for (int j = 0; j < d; ++j)
                                used = used || sym[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] != 0.0;
                            if (!used) continue;
                            ScalarField db(g);
                            {
                                const double* src = block.component(c);
                                for (std::size_t idx = 0; idx < g.cells(); ++idx) db[idx] = src[idx];
                            }
                            if (l > 0) db = iterated_forward_diff(db, dl, mac);
                            for (int j = 0; j < d; ++j) {
                                const double f = coeff * sym[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
                                if (f == 0.0) continue;
                                double* oj = out.component(j);
                                for (std::size_t idx = 0; idx < g.cells(); ++idx)
                                    oj[idx] += f * db[idx] * der[idx];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

struct TaylorCommutatorSamples {
    std::vector<std::size_t> sites;
    std::vector<std::array<double, 3>> values;
};

namespace detail {

// multi-exponents with |alpha| <= max_total, plus the rank lookup used to
// index Taylor derivative tables
struct ExponentTable {
    std::vector<std::array<int, 3>> exps;
    std::vector<double> inv_factorial;
    std::vector<IndexTuple> dirs;
    int d = 0;
    int max_total = 0;

    ExponentTable(int dim, int total) : d(dim), max_total(total) {
        std::array<int, 3> e{0, 0, 0};
        fill(e, 0, total);
    }

    std::size_t rank(const std::array<int, 3>& e) const {
        std::size_t base = static_cast<std::size_t>(max_total) + 1;
        std::size_t r = 0;
        for (int j = 0; j < d; ++j) r = r * base + static_cast<std::size_t>(e[static_cast<std::size_t>(j)]);
        return lookup_[r];
    }

private:
    void fill(std::array<int, 3>& e, int dim, int remaining) {
        if (dim == d) {
            std::size_t base = static_cast<std::size_t>(max_total) + 1;
            std::size_t r = 0;
            for (int j = 0; j < d; ++j) r = r * base + static_cast<std::size_t>(e[static_cast<std::size_t>(j)]);
            if (lookup_.size() <= r) lookup_.resize(r + 1, SIZE_MAX);
            lookup_[r] = exps.size();
            exps.push_back(e);
            double f = 1.0;
            IndexTuple dt;
            for (int j = 0; j < d; ++j)
                for (int rep = 0; rep < e[static_cast<std::size_t>(j)]; ++rep) {
                    f *= rep + 1;
                    dt.push_back(j);
                }
            inv_factorial.push_back(1.0 / f);
            dirs.push_back(dt);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            e[static_cast<std::size_t>(dim)] = v;
            fill(e, dim + 1, remaining - v);
            e[static_cast<std::size_t>(dim)] = 0;
        }
    }

    std::vector<std::size_t> lookup_;
};

inline std::array<int, 3> tuple_exponent(const IndexTuple& t) {
    std::array<int, 3> e{0, 0, 0};
    for (int dir : t) ++e[static_cast<std::size_t>(dir)];
    return e;
}

} // namespace detail

// Xi°^n[grad w](x) by its defining construction: freeze the profile into its
// degree-n Taylor polynomial at the basepoint, push that through E^n and the
// shared commutator assembly, and read the result back at the basepoint.
// Basepoints run over the sublattice with the given stride per axis. The
// Taylor field wraps its displacement to the centered torus window, so the
// stencil neighborhood of each basepoint never sees the wrap seam.
inline TaylorCommutatorSamples standard_commutator_taylor(const CoefficientField& a, const CorrectorSet& set,
                                                          const AbarTensors& abar, const FourierPoly& w,
                                                          int n, double eps, int stride = 1) {
    const TorusGrid& g = set.grid;
    const int d = g.dim();
    const int nn = g.n();
    if (n < 1) throw std::invalid_argument("standard_commutator_taylor: order must be >= 1");
    if (n > set.max_order() || n > abar.max_order)
        throw std::invalid_argument("standard_commutator_taylor: order exceeds hierarchy");
    if (stride < 1 || nn % stride != 0)
        throw std::invalid_argument("standard_commutator_taylor: stride must divide the grid");

    const detail::ExponentTable table(d, n);

    // corrector blocks for every tuple length 1..n, shared across basepoints
    std::vector<std::vector<VectorField>> blocks(static_cast<std::size_t>(n));
    std::vector<std::vector<IndexTuple>> tuples(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        tuples[static_cast<std::size_t>(k)] = enumerate_tuples(d, k + 1);
        for (const IndexTuple& t : tuples[static_cast<std::size_t>(k)])
            blocks[static_cast<std::size_t>(k)].push_back(corrector_block(set, t));
    }

    std::vector<std::size_t> sites;
    {
        std::array<int, 3> c{0, 0, 0};
        const int per_axis = nn / stride;
        std::size_t count = 1;
        for (int j = 0; j < d; ++j) count *= static_cast<std::size_t>(per_axis);
        for (std::size_t r = 0; r < count; ++r) {
            std::size_t rem = r;
            for (int j = d - 1; j >= 0; --j) {
                c[static_cast<std::size_t>(j)] = static_cast<int>(rem % static_cast<std::size_t>(per_axis)) * stride;
                rem /= static_cast<std::size_t>(per_axis);
            }
            sites.push_back(g.index(c));
        }
    }

    TaylorCommutatorSamples out;
    out.sites = sites;
    out.values.assign(sites.size(), std::array<double, 3>{0.0, 0.0, 0.0});

    std::vector<double> monomial(table.exps.size() * g.cells());

    for (std::size_t b = 0; b < sites.size(); ++b) {
        const std::size_t base_site = sites[b];
        const std::array<int, 3> cb = g.coords(base_site);
        std::array<double, 3> xb{0.0, 0.0, 0.0};
        for (int j = 0; j < d; ++j) xb[static_cast<std::size_t>(j)] = static_cast<double>(cb[static_cast<std::size_t>(j)]) / nn;

        std::vector<double> deriv(table.exps.size());
        for (std::size_t e = 0; e < table.exps.size(); ++e)
            deriv[e] = w.derivative_at(table.dirs[e], xb);

        // y^alpha over the lattice with y the centered wrapped displacement
        for (std::size_t s = 0; s < g.cells(); ++s) {
            const std::array<int, 3> cs = g.coords(s);
            std::array<double, 3> y{0.0, 0.0, 0.0};
            for (int j = 0; j < d; ++j) {
                int diff = cs[static_cast<std::size_t>(j)] - cb[static_cast<std::size_t>(j)];
                if (diff > nn / 2) diff -= nn;
                else if (diff <= -nn / 2) diff += nn;
                y[static_cast<std::size_t>(j)] = static_cast<double>(diff) / nn;
            }
            for (std::size_t e = 0; e < table.exps.size(); ++e) {
                double v = 1.0;
                for (int j = 0; j < d; ++j)
                    for (int rep = 0; rep < table.exps[e][static_cast<std::size_t>(j)]; ++rep)
                        v *= y[static_cast<std::size_t>(j)];
                monomial[e * g.cells() + s] = v;
            }
        }

        VectorField efield(g);
        for (int k = 0; k < n; ++k) {
            const double ek = std::pow(eps, k);
            for (std::size_t ti = 0; ti < tuples[static_cast<std::size_t>(k)].size(); ++ti) {
                const IndexTuple& t = tuples[static_cast<std::size_t>(k)][ti];
                const std::array<int, 3> texp = detail::tuple_exponent(t);

                // Taylor derivative of order |t|: sum over |alpha| <= n - |t|
                ScalarField p(g);
                for (std::size_t e = 0; e < table.exps.size(); ++e) {
                    int total = 0;
                    for (int j = 0; j < d; ++j) total += table.exps[e][static_cast<std::size_t>(j)];
                    if (total > n - (k + 1)) continue;
                    std::array<int, 3> shifted = table.exps[e];
                    for (int j = 0; j < d; ++j) shifted[static_cast<std::size_t>(j)] += texp[static_cast<std::size_t>(j)];
                    const double coef = deriv[table.rank(shifted)] * table.inv_factorial[e];
                    if (coef == 0.0) continue;
                    const double* mono = &monomial[e * g.cells()];
                    for (std::size_t s = 0; s < g.cells(); ++s) p[s] += coef * mono[s];
                }

                const VectorField& block = blocks[static_cast<std::size_t>(k)][ti];
                for (int j = 0; j < d; ++j) {
                    double* ej = efield.component(j);
                    const double* bj = block.component(j);
                    for (std::size_t s = 0; s < g.cells(); ++s) ej[s] += ek * bj[s] * p[s];
                }
            }
        }

        const VectorField xi = commutator(a, abar, efield, n, eps);
        for (int j = 0; j < d; ++j) out.values[b][static_cast<std::size_t>(j)] = xi.at(j, base_site);
    }
    return out;
}

// sup gap between the Taylor samples and the explicit field at the sampled
// sites, relative to the explicit field's sup there
inline double max_pointwise_gap(const TaylorCommutatorSamples& taylor, const VectorField& expl) {
    const int d = expl.grid().dim();
    double gap = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < taylor.sites.size(); ++i)
        for (int j = 0; j < d; ++j) {
            const double e = expl.at(j, taylor.sites[i]);
            gap = std::max(gap, std::abs(taylor.values[i][static_cast<std::size_t>(j)] - e));
            scale = std::max(scale, std::abs(e));
        }
    return scale == 0.0 ? gap : gap / scale;
}

} // namespace homoglab
