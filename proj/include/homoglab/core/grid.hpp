#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace homoglab {

// Periodic lattice on [0, side)^dim with n points per side, spacing h = side/n.
// Sites are stored row-major (last coordinate fastest). Neighbor tables are
// precomputed so stencil sweeps are plain array lookups.
class TorusGrid {
public:
    TorusGrid(int dim, int n, double side)
        : dim_(dim), n_(n), side_(side) {
        if (dim < 1 || dim > 3) throw std::invalid_argument("TorusGrid: dim must be 1, 2, or 3");
        if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("TorusGrid: n must be a power of two >= 2");
        if (!(side > 0.0)) throw std::invalid_argument("TorusGrid: side length must be positive");
        cells_ = 1;
        for (int k = 0; k < dim; ++k) cells_ *= static_cast<std::size_t>(n);
        strides_[dim - 1] = 1;
        for (int k = dim - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * static_cast<std::size_t>(n);
        for (int k = 0; k < dim; ++k) {
            up_[k].resize(cells_);
            down_[k].resize(cells_);
        }
        std::array<int, 3> c{0, 0, 0};
        for (std::size_t s = 0; s < cells_; ++s) {
            for (int k = 0; k < dim; ++k) {
                const int ck = c[k];
                up_[k][s] = s + ((ck + 1 == n) ? -static_cast<std::ptrdiff_t>((n - 1) * strides_[k])
                                               : static_cast<std::ptrdiff_t>(strides_[k]));
                down_[k][s] = s + ((ck == 0) ? static_cast<std::ptrdiff_t>((n - 1) * strides_[k])
                                             : -static_cast<std::ptrdiff_t>(strides_[k]));
            }
            for (int k = dim - 1; k >= 0; --k) {
                if (++c[k] < n) break;
                c[k] = 0;
            }
        }
    }

    int dim() const { return dim_; }
    int n() const { return n_; }
    double side() const { return side_; }
    double h() const { return side_ / n_; }
    double eps() const { return 1.0 / side_; }
    std::size_t cells() const { return cells_; }

    std::size_t up(int k, std::size_t s) const { return up_[k][s]; }
    std::size_t down(int k, std::size_t s) const { return down_[k][s]; }

    std::array<int, 3> coords(std::size_t s) const {
        std::array<int, 3> c{0, 0, 0};
        for (int k = 0; k < dim_; ++k) {
            c[k] = static_cast<int>((s / strides_[k]) % static_cast<std::size_t>(n_));
        }
        return c;
    }

    std::size_t index(const std::array<int, 3>& c) const {
        std::size_t s = 0;
        for (int k = 0; k < dim_; ++k) s += static_cast<std::size_t>(wrap(c[k])) * strides_[k];
        return s;
    }

    std::size_t shifted(std::size_t s, int k, int delta) const {
        auto c = coords(s);
        c[k] += delta;
        return index(c);
    }

    int wrap(int i) const {
        int r = i % n_;
        return r < 0 ? r + n_ : r;
    }

    // Position of a site in microscopic units (spacing h) and on the unit
    // macroscopic torus (spacing 1/n).
    std::array<double, 3> position_micro(std::size_t s) const {
        auto c = coords(s);
        return {c[0] * h(), c[1] * h(), c[2] * h()};
    }
    std::array<double, 3> position_macro(std::size_t s) const {
        auto c = coords(s);
        const double inv = 1.0 / n_;
        return {c[0] * inv, c[1] * inv, c[2] * inv};
    }

    bool operator==(const TorusGrid& o) const {
        return dim_ == o.dim_ && n_ == o.n_ && side_ == o.side_;
    }
    bool operator!=(const TorusGrid& o) const { return !(*this == o); }

    std::string describe() const {
        return "d=" + std::to_string(dim_) + " n=" + std::to_string(n_) + " side=" + std::to_string(side_);
    }

private:
    int dim_;
    int n_;
    double side_;
    std::size_t cells_ = 0;
    std::array<std::size_t, 3> strides_{1, 1, 1};
    std::array<std::vector<std::size_t>, 3> up_;
    std::array<std::vector<std::size_t>, 3> down_;
};

} // namespace homoglab
