#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "homoglab/core/grid.hpp"
#include "homoglab/core/smallmat.hpp"

namespace homoglab {

class ScalarField {
public:
    explicit ScalarField(const TorusGrid& g) : grid_(&g), v_(g.cells(), 0.0) {}

    const TorusGrid& grid() const { return *grid_; }
    double& operator[](std::size_t s) { return v_[s]; }
    double operator[](std::size_t s) const { return v_[s]; }
    std::size_t size() const { return v_.size(); }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    double mean() const {
        double s = 0.0;
        for (double x : v_) s += x;
        return s / static_cast<double>(v_.size());
    }
    void subtract_mean() {
        const double m = mean();
        for (double& x : v_) x -= m;
    }
    double l2() const {
        // volume-weighted L2 norm: (h^d sum x^2)^(1/2) with the microscopic spacing
        double s = 0.0;
        for (double x : v_) s += x * x;
        return std::sqrt(s * cell_volume());
    }
    double rms() const {
        double s = 0.0;
        for (double x : v_) s += x * x;
        return std::sqrt(s / static_cast<double>(v_.size()));
    }
    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }
    double cell_volume() const {
        double vol = 1.0;
        for (int k = 0; k < grid_->dim(); ++k) vol *= grid_->h();
        return vol;
    }

private:
    const TorusGrid* grid_;
    std::vector<double> v_;
};

// Per-site vectors, component-major: component k occupies a contiguous plane.
class VectorField {
public:
    explicit VectorField(const TorusGrid& g)
        : grid_(&g), v_(static_cast<std::size_t>(g.dim()) * g.cells(), 0.0) {}

    const TorusGrid& grid() const { return *grid_; }
    double& at(int k, std::size_t s) { return v_[static_cast<std::size_t>(k) * grid_->cells() + s]; }
    double at(int k, std::size_t s) const { return v_[static_cast<std::size_t>(k) * grid_->cells() + s]; }
    double* component(int k) { return v_.data() + static_cast<std::size_t>(k) * grid_->cells(); }
    const double* component(int k) const { return v_.data() + static_cast<std::size_t>(k) * grid_->cells(); }

    std::array<double, 3> vec(std::size_t s) const {
        std::array<double, 3> r{0.0, 0.0, 0.0};
        for (int k = 0; k < grid_->dim(); ++k) r[k] = at(k, s);
        return r;
    }
    void set_vec(std::size_t s, const std::array<double, 3>& x) {
        for (int k = 0; k < grid_->dim(); ++k) at(k, s) = x[k];
    }

    VectorField& operator+=(const VectorField& o) {
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    VectorField& operator*=(double c) {
        for (double& x : v_) x *= c;
        return *this;
    }

    std::array<double, 3> mean() const {
        std::array<double, 3> m{0.0, 0.0, 0.0};
        for (int k = 0; k < grid_->dim(); ++k) {
            const double* p = component(k);
            double s = 0.0;
            for (std::size_t i = 0; i < grid_->cells(); ++i) s += p[i];
            m[k] = s / static_cast<double>(grid_->cells());
        }
        return m;
    }
    double l2() const {
        double s = 0.0;
        for (double x : v_) s += x * x;
        double vol = 1.0;
        for (int k = 0; k < grid_->dim(); ++k) vol *= grid_->h();
        return std::sqrt(s * vol);
    }
    double rms() const {
        double s = 0.0;
        for (double x : v_) s += x * x;
        return std::sqrt(s / static_cast<double>(grid_->cells()));
    }
    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    const TorusGrid* grid_;
    std::vector<double> v_;
};

inline double dot_l2(const VectorField& x, const VectorField& y) {
    const TorusGrid& g = x.grid();
    double s = 0.0;
    for (int k = 0; k < g.dim(); ++k) {
        const double* px = x.component(k);
        const double* py = y.component(k);
        for (std::size_t i = 0; i < g.cells(); ++i) s += px[i] * py[i];
    }
    double vol = 1.0;
    for (int k = 0; k < g.dim(); ++k) vol *= g.h();
    return s * vol;
}

inline double dot_l2(const ScalarField& x, const ScalarField& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s * x.cell_volume();
}

// Integrals in the macroscopic chart: the same lattice read as the unit torus
// with cell volume N^-d, so an integral is a plain site average.
inline double average_dot(const ScalarField& x, const ScalarField& y) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<long double>(x[i]) * y[i];
    return static_cast<double>(s / static_cast<long double>(x.size()));
}

inline double average_dot(const VectorField& x, const VectorField& y) {
    const TorusGrid& g = x.grid();
    long double s = 0.0L;
    for (int k = 0; k < g.dim(); ++k) {
        const double* px = x.component(k);
        const double* py = y.component(k);
        for (std::size_t i = 0; i < g.cells(); ++i) s += static_cast<long double>(px[i]) * py[i];
    }
    return static_cast<double>(s / static_cast<long double>(g.cells()));
}

inline double average_sqnorm(const VectorField& x) { return average_dot(x, x); }

// Antisymmetric per-site matrices; only the i<j entries are stored, so the
// skew symmetry sigma_ij = -sigma_ji is exact by construction.
class SkewField {
public:
    explicit SkewField(const TorusGrid& g)
        : grid_(&g), pairs_(static_cast<std::size_t>(g.dim()) * (g.dim() - 1) / 2),
          v_(pairs_ * g.cells(), 0.0) {}

    const TorusGrid& grid() const { return *grid_; }
    std::size_t pair_count() const { return pairs_; }

    static int pair_index(int d, int i, int j) {
        // (0,1) -> 0, (0,2) -> 1, (1,2) -> 2 for d=3; (0,1) -> 0 for d=2
        (void)d;
        return i + j - 1;
    }

    double& entry(int i, int j, std::size_t s) {
        return v_[static_cast<std::size_t>(pair_index(grid_->dim(), i, j)) * grid_->cells() + s];
    }
    double get(int i, int j, std::size_t s) const {
        if (i == j) return 0.0;
        const bool swap = i > j;
        const int a = swap ? j : i, b = swap ? i : j;
        const double x = v_[static_cast<std::size_t>(pair_index(grid_->dim(), a, b)) * grid_->cells() + s];
        return swap ? -x : x;
    }

    Mat mat(std::size_t s) const {
        Mat m = Mat::zero(grid_->dim());
        for (int i = 0; i < grid_->dim(); ++i)
            for (int j = 0; j < grid_->dim(); ++j) m(i, j) = get(i, j, s);
        return m;
    }

    double* pair_plane(int p) { return v_.data() + static_cast<std::size_t>(p) * grid_->cells(); }
    const double* pair_plane(int p) const { return v_.data() + static_cast<std::size_t>(p) * grid_->cells(); }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    const TorusGrid* grid_;
    std::size_t pairs_;
    std::vector<double> v_;
};

} // namespace homoglab
