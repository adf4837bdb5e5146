#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace homoglab {

// Dense d x d matrix with d <= 3, stored row-major in a fixed 3x3 block.
struct Mat {
    int d = 0;
    std::array<double, 9> a{};

    static Mat zero(int d) { return Mat{d, {}}; }
    static Mat identity(int d) {
        Mat m = zero(d);
        for (int i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }
    static Mat scaled_identity(int d, double c) {
        Mat m = zero(d);
        for (int i = 0; i < d; ++i) m(i, i) = c;
        return m;
    }

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(3 * i + j)]; }

    Mat transpose() const {
        Mat m = zero(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = (*this)(j, i);
        return m;
    }

    Mat sym() const {
        Mat m = zero(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
        return m;
    }

    Mat& operator+=(const Mat& o) {
        for (std::size_t k = 0; k < 9; ++k) a[k] += o.a[k];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (std::size_t k = 0; k < 9; ++k) a[k] -= o.a[k];
        return *this;
    }
    Mat& operator*=(double c) {
        for (std::size_t k = 0; k < 9; ++k) a[k] *= c;
        return *this;
    }

    friend Mat operator+(Mat x, const Mat& y) { return x += y; }
    friend Mat operator-(Mat x, const Mat& y) { return x -= y; }
    friend Mat operator*(double c, Mat x) { return x *= c; }

    std::array<double, 3> apply(const std::array<double, 3>& v) const {
        std::array<double, 3> r{0.0, 0.0, 0.0};
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) r[i] += (*this)(i, j) * v[j];
        return r;
    }

    // Column j, i.e. the image of the basis vector e_j.
    std::array<double, 3> column(int j) const {
        std::array<double, 3> r{0.0, 0.0, 0.0};
        for (int i = 0; i < d; ++i) r[i] = (*this)(i, j);
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m = std::max(m, std::abs((*this)(i, j)));
        return m;
    }

    double frobenius() const {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }

    // Smallest eigenvalue of the symmetric part; closed forms for d <= 2,
    // classical trigonometric solution of the characteristic cubic for d = 3.
    double min_sym_eig() const {
        const Mat s = sym();
        if (d == 1) return s(0, 0);
        if (d == 2) {
            const double tr = s(0, 0) + s(1, 1);
            const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
            const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
            return 0.5 * tr - disc;
        }
        const double q = (s(0, 0) + s(1, 1) + s(2, 2)) / 3.0;
        Mat b = s;
        for (int i = 0; i < 3; ++i) b(i, i) -= q;
        double p2 = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) p2 += b(i, j) * b(i, j);
        const double p = std::sqrt(p2 / 6.0);
        if (p < 1e-300) return q;
        const double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
                          - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                          + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        double r = detb / (2.0 * p * p * p);
        r = std::max(-1.0, std::min(1.0, r));
        const double phi = std::acos(r) / 3.0;
        // smallest root of the shifted characteristic polynomial
        return q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    }

    // Operator (spectral) norm via the largest eigenvalue of a^T a.
    double op_norm() const {
        Mat g = zero(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int k = 0; k < d; ++k) s += (*this)(k, i) * (*this)(k, j);
                g(i, j) = s;
            }
        if (d == 1) return std::sqrt(g(0, 0));
        if (d == 2) {
            const double tr = g(0, 0) + g(1, 1);
            const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
            const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
            return std::sqrt(std::max(0.0, 0.5 * tr + disc));
        }
        // largest eigenvalue of the symmetric 3x3 Gram matrix
        const double q = (g(0, 0) + g(1, 1) + g(2, 2)) / 3.0;
        Mat b = g;
        for (int i = 0; i < 3; ++i) b(i, i) -= q;
        double p2 = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) p2 += b(i, j) * b(i, j);
        const double p = std::sqrt(p2 / 6.0);
        if (p < 1e-300) return std::sqrt(std::max(0.0, q));
        const double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
                          - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                          + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        double r = detb / (2.0 * p * p * p);
        r = std::max(-1.0, std::min(1.0, r));
        const double phi = std::acos(r) / 3.0;
        return std::sqrt(std::max(0.0, q + 2.0 * p * std::cos(phi)));
    }
};

inline double dot3(const std::array<double, 3>& x, const std::array<double, 3>& y, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += x[i] * y[i];
    return s;
}

} // namespace homoglab
