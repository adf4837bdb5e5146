#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "homoglab/core/errors.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/core/grid.hpp"
#include "homoglab/core/smallmat.hpp"
#include "homoglab/random/gaussian_field.hpp"

namespace homoglab {

// Pointwise map g -> a0(g) from the Gaussian field into coefficient matrices.
// Every built-in except the test-only linear map lands in the uniformly
// elliptic class: xi . a xi >= lambda |xi|^2 and |a xi| <= |xi|.
struct CoefficientMapSpec {
    enum class Kind {
        clipped_sigmoid_isotropic,
        diagonal_anisotropic,
        nonsymmetric_skew,
        constant_isotropic,
        linear_test, // test-only: ellipticity certificate deliberately waived
    };

    Kind kind = Kind::clipped_sigmoid_isotropic;
    int d = 2;
    int kappa = 1;
    double lambda = 0.25;
    double constant_value = 1.0;   // constant_isotropic
    double channel_offset = 0.5;   // diagonal_anisotropic stagger between axes
    double linear_base = 1.0;      // linear_test: a = (base + slope*g) Id
    double linear_slope = 0.5;

    static double sigmoid(double g) { return 0.5 * (1.0 + std::tanh(g)); }
    static double sigmoid_d1(double g) {
        const double c = std::cosh(g);
        return 0.5 / (c * c);
    }
    static double sigmoid_d2(double g) {
        const double c = std::cosh(g);
        return -std::tanh(g) / (c * c);
    }

    bool certificate_waived() const { return kind == Kind::linear_test; }

    std::string kind_name() const {
        switch (kind) {
            case Kind::clipped_sigmoid_isotropic: return "clipped-sigmoid-isotropic";
            case Kind::diagonal_anisotropic: return "diagonal-anisotropic";
            case Kind::nonsymmetric_skew: return "nonsymmetric-with-skew-part";
            case Kind::constant_isotropic: return "constant-isotropic";
            case Kind::linear_test: return "linear-test";
        }
        return "?";
    }

    static Kind kind_from_name(const std::string& name) {
        if (name == "clipped-sigmoid-isotropic") return Kind::clipped_sigmoid_isotropic;
        if (name == "diagonal-anisotropic") return Kind::diagonal_anisotropic;
        if (name == "nonsymmetric-with-skew-part") return Kind::nonsymmetric_skew;
        if (name == "constant-isotropic") return Kind::constant_isotropic;
        if (name == "linear-test") return Kind::linear_test;
        throw config_error("unknown coefficient map kind '" + name + "'");
    }

    Mat apply(const double* g) const {
        switch (kind) {
            case Kind::clipped_sigmoid_isotropic:
                return Mat::scaled_identity(d, lambda + (1.0 - lambda) * sigmoid(g[0]));
            case Kind::diagonal_anisotropic: {
                Mat m = Mat::zero(d);
                for (int j = 0; j < d; ++j)
                    m(j, j) = lambda + (1.0 - lambda) * sigmoid(g[j % kappa] - channel_offset * j);
                return m;
            }
            case Kind::nonsymmetric_skew: {
                // shrunken isotropic range keeps |a xi| <= |xi| with the skew part on top
                const double alpha = lambda + (0.9 - lambda) * sigmoid(g[0]);
                const double beta = 0.2 * sigmoid(g[0]);
                Mat m = Mat::scaled_identity(d, alpha);
                if (d >= 2) {
                    m(0, 1) += beta;
                    m(1, 0) -= beta;
                }
                return m;
            }
            case Kind::constant_isotropic:
                return Mat::scaled_identity(d, constant_value);
            case Kind::linear_test:
                return Mat::scaled_identity(d, linear_base + linear_slope * g[0]);
        }
        return Mat::zero(d);
    }

    // da/dg_channel at g
    Mat derivative(const double* g, int channel) const {
        switch (kind) {
            case Kind::clipped_sigmoid_isotropic:
                if (channel != 0) return Mat::zero(d);
                return Mat::scaled_identity(d, (1.0 - lambda) * sigmoid_d1(g[0]));
            case Kind::diagonal_anisotropic: {
                Mat m = Mat::zero(d);
                for (int j = 0; j < d; ++j)
                    if (j % kappa == channel)
                        m(j, j) = (1.0 - lambda) * sigmoid_d1(g[j % kappa] - channel_offset * j);
                return m;
            }
            case Kind::nonsymmetric_skew: {
                if (channel != 0) return Mat::zero(d);
                const double s1 = sigmoid_d1(g[0]);
                Mat m = Mat::scaled_identity(d, (0.9 - lambda) * s1);
                if (d >= 2) {
                    m(0, 1) += 0.2 * s1;
                    m(1, 0) -= 0.2 * s1;
                }
                return m;
            }
            case Kind::constant_isotropic:
                return Mat::zero(d);
            case Kind::linear_test:
                if (channel != 0) return Mat::zero(d);
                return Mat::scaled_identity(d, linear_slope);
        }
        return Mat::zero(d);
    }

    Mat second_derivative(const double* g, int channel) const {
        switch (kind) {
            case Kind::clipped_sigmoid_isotropic:
                if (channel != 0) return Mat::zero(d);
                return Mat::scaled_identity(d, (1.0 - lambda) * sigmoid_d2(g[0]));
            case Kind::diagonal_anisotropic: {
                Mat m = Mat::zero(d);
                for (int j = 0; j < d; ++j)
                    if (j % kappa == channel)
                        m(j, j) = (1.0 - lambda) * sigmoid_d2(g[j % kappa] - channel_offset * j);
                return m;
            }
            case Kind::nonsymmetric_skew: {
                if (channel != 0) return Mat::zero(d);
                const double s2 = sigmoid_d2(g[0]);
                Mat m = Mat::scaled_identity(d, (0.9 - lambda) * s2);
                if (d >= 2) {
                    m(0, 1) += 0.2 * s2;
                    m(1, 0) -= 0.2 * s2;
                }
                return m;
            }
            default:
                return Mat::zero(d);
        }
    }

    std::string describe() const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s lambda=%.17g kappa=%d", kind_name().c_str(), lambda, kappa);
        return buf;
    }
};

struct EllipticityCertificate {
    bool waived = false;
    double lambda_floor = 0.0;
    double min_sym_eig = 0.0;
    double max_op_norm = 0.0;
};

// Per-site d x d coefficients, certified elliptic at sampling time.
class CoefficientField {
public:
    CoefficientField(const TorusGrid& g, double lambda_floor)
        : grid_(&g), lambda_(lambda_floor),
          v_(static_cast<std::size_t>(g.dim()) * static_cast<std::size_t>(g.dim()) * g.cells(), 0.0) {}

    const TorusGrid& grid() const { return *grid_; }
    double lambda_floor() const { return lambda_; }
    const EllipticityCertificate& certificate() const { return cert_; }
    bool is_symmetric() const { return symmetric_; }

    Mat at(std::size_t s) const {
        const int d = grid_->dim();
        Mat m = Mat::zero(d);
        const double* p = block(s);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = p[i * d + j];
        return m;
    }
    void set(std::size_t s, const Mat& m) {
        const int d = grid_->dim();
        double* p = block(s);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) p[i * d + j] = m(i, j);
    }
    const double* block(std::size_t s) const {
        const auto dd = static_cast<std::size_t>(grid_->dim()) * static_cast<std::size_t>(grid_->dim());
        return v_.data() + dd * s;
    }
    double* block(std::size_t s) {
        const auto dd = static_cast<std::size_t>(grid_->dim()) * static_cast<std::size_t>(grid_->dim());
        return v_.data() + dd * s;
    }

    // Pointwise transpose; the homogenization dual uses the same sample with
    // the matrix slots swapped, no re-sampling involved.
    CoefficientField adjoint() const {
        CoefficientField out(*grid_, lambda_);
        for (std::size_t s = 0; s < grid_->cells(); ++s) out.set(s, at(s).transpose());
        out.cert_ = cert_;
        out.symmetric_ = symmetric_;
        return out;
    }

    void finalize_certificate(bool waived) {
        cert_.waived = waived;
        cert_.lambda_floor = lambda_;
        double min_eig = 1e300, max_norm = 0.0;
        double max_asym = 0.0;
        std::size_t bad_site = 0;
        for (std::size_t s = 0; s < grid_->cells(); ++s) {
            const Mat m = at(s);
            const double e = m.min_sym_eig();
            const double o = m.op_norm();
            if (e < min_eig) { min_eig = e; }
            if (o > max_norm) { max_norm = o; bad_site = s; }
            max_asym = std::max(max_asym, (m - m.transpose()).max_abs());
        }
        cert_.min_sym_eig = min_eig;
        cert_.max_op_norm = max_norm;
        symmetric_ = max_asym == 0.0;
        if (!waived) {
            const double tol = 1e-12;
            if (min_eig < lambda_ - tol || max_norm > 1.0 + tol) {
                const std::string vec = violating_vector_report();
                char buf[256];
                std::snprintf(buf, sizeof buf,
                              "coefficient field fails the ellipticity contract: min sym eig %.6g (floor %.6g), "
                              "max |a xi|/|xi| %.6g at site %zu, test vector %s",
                              min_eig, lambda_, max_norm, bad_site, vec.c_str());
                throw std::invalid_argument(buf);
            }
        }
    }

private:
    std::string violating_vector_report() const {
        // probe a fixed direction set and report the worst unit vector
        double worst = -1.0;
        std::array<double, 3> arg{1.0, 0.0, 0.0};
        std::uint64_t state = 0x243f6a8885a308d3ull;
        const int d = grid_->dim();
        for (int trial = 0; trial < 256; ++trial) {
            std::array<double, 3> xi{0.0, 0.0, 0.0};
            double norm2 = 0.0;
            for (int j = 0; j < d; ++j) {
                state = state * 6364136223846793005ull + 1442695040888963407ull;
                xi[j] = static_cast<double>(static_cast<std::int64_t>(state >> 11)) / 9007199254740992.0 - 0.5;
                norm2 += xi[j] * xi[j];
            }
            if (norm2 < 1e-12) continue;
            const double inv = 1.0 / std::sqrt(norm2);
            for (int j = 0; j < d; ++j) xi[j] *= inv;
            for (std::size_t s = 0; s < grid_->cells(); ++s) {
                const Mat m = at(s);
                const auto ax = m.apply(xi);
                double n2 = 0.0, q = 0.0;
                for (int j = 0; j < d; ++j) {
                    n2 += ax[j] * ax[j];
                    q += xi[j] * ax[j];
                }
                const double badness = std::max(std::sqrt(n2) - 1.0, lambda_ - q);
                if (badness > worst) { worst = badness; arg = xi; }
            }
        }
        char buf[96];
        std::snprintf(buf, sizeof buf, "(%.6g, %.6g, %.6g)", arg[0], arg[1], arg[2]);
        return buf;
    }

    const TorusGrid* grid_;
    double lambda_;
    std::vector<double> v_;
    EllipticityCertificate cert_;
    bool symmetric_ = true;
};

inline CoefficientField sample_coefficient_field(const GaussianFieldSample& field, const CoefficientMapSpec& spec) {
    const TorusGrid& g = *field.grid;
    if (spec.d != g.dim()) throw std::invalid_argument("sample_coefficient_field: dimension mismatch");
    if (spec.kappa != field.kappa) throw std::invalid_argument("sample_coefficient_field: kappa mismatch");
    CoefficientField out(g, spec.lambda);
    std::vector<double> gv(static_cast<std::size_t>(field.kappa), 0.0);
    for (std::size_t s = 0; s < g.cells(); ++s) {
        for (int c = 0; c < field.kappa; ++c) gv[static_cast<std::size_t>(c)] = field.at(c, s);
        out.set(s, spec.apply(gv.data()));
    }
    out.finalize_certificate(spec.certificate_waived());
    return out;
}

inline CoefficientField constant_coefficient_field(const TorusGrid& g, const Mat& value, double lambda_floor) {
    CoefficientField out(g, lambda_floor);
    for (std::size_t s = 0; s < g.cells(); ++s) out.set(s, value);
    out.finalize_certificate(false);
    return out;
}

} // namespace homoglab
