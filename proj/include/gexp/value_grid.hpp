#pragma once

// Uniform rectangular grid with multilinear interpolation. Queries outside
// the axis range extrapolate linearly from the edge cell. Interpolation is
// built from nested lerps (v0 + t*(v1 - v0)), so constant data reproduces
// exactly and linear data is interpolated and extrapolated without error.

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gexp {

struct GridAxis {
    double lo = 0.0;
    double h = 1.0;
    int count = 2;

    double hi() const { return lo + h * (count - 1); }
    double node(int i) const { return lo + h * i; }
};

class ValueGrid {
public:
    static constexpr int kMaxDim = 4;

    explicit ValueGrid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
        if (axes_.empty() || static_cast<int>(axes_.size()) > kMaxDim)
            throw std::invalid_argument("ValueGrid: 1..4 axes supported");
        std::size_t total = 1;
        for (const auto& a : axes_) {
            if (a.count < 2 || a.h <= 0.0)
                throw std::invalid_argument("ValueGrid: bad axis");
            total *= static_cast<std::size_t>(a.count);
        }
        strides_.resize(axes_.size());
        std::size_t s = 1;
        for (int d = static_cast<int>(axes_.size()) - 1; d >= 0; --d) {
            strides_[d] = s;
            s *= static_cast<std::size_t>(axes_[d].count);
        }
        values_.assign(total, 0.0);
    }

    int dim() const { return static_cast<int>(axes_.size()); }
    const std::vector<GridAxis>& axes() const { return axes_; }
    const GridAxis& axis(int d) const { return axes_[d]; }
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t flat) { return values_[flat]; }
    double operator[](std::size_t flat) const { return values_[flat]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    std::size_t flat_index(const int* idx) const {
        std::size_t f = 0;
        for (int d = 0; d < dim(); ++d) f += strides_[d] * idx[d];
        return f;
    }

    void unflatten(std::size_t flat, int* idx) const {
        for (int d = 0; d < dim(); ++d) {
            idx[d] = static_cast<int>(flat / strides_[d]);
            flat %= strides_[d];
        }
    }

    // Multilinear value at x (dim() coordinates), linear beyond the edges.
    double interpolate(const double* x) const {
        int base[kMaxDim];
        double t[kMaxDim];
        for (int d = 0; d < dim(); ++d) {
            const GridAxis& a = axes_[d];
            const double s = (x[d] - a.lo) / a.h;
            int i = static_cast<int>(s);
            if (s < 0.0) i = 0;
            if (i > a.count - 2) i = a.count - 2;
            base[d] = i;
            t[d] = s - i; // outside [0,1] at the edges: linear extrapolation
        }
        double corner[1 << kMaxDim];
        const int corners = 1 << dim();
        for (int c = 0; c < corners; ++c) {
            std::size_t f = 0;
            for (int d = 0; d < dim(); ++d)
                f += strides_[d] * (base[d] + ((c >> d) & 1));
            corner[c] = values_[f];
        }
        // reduce one axis at a time
        for (int d = dim() - 1; d >= 0; --d) {
            const int half = 1 << d;
            for (int c = 0; c < half; ++c) {
                const double v0 = corner[2 * c];
                const double v1 = corner[2 * c + 1];
                corner[c] = v0 + t[dim() - 1 - d] * (v1 - v0);
            }
        }
        return corner[0];
    }

    double interpolate1(double x) const { return interpolate(&x); }

    double interpolate2(double x, double y) const {
        const double q[2] = {x, y};
        return interpolate(q);
    }

    bool in_range(const double* x) const {
        for (int d = 0; d < dim(); ++d)
            if (x[d] < axes_[d].lo || x[d] > axes_[d].hi()) return false;
        return true;
    }

private:
    std::vector<GridAxis> axes_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
};

// Centered axis whose node set contains 0 exactly.
inline GridAxis centered_axis(double radius, double h) {
    if (radius <= 0.0 || h <= 0.0)
        throw std::invalid_argument("centered_axis: radius and h must be > 0");
    const int half = static_cast<int>(radius / h + 0.5);
    GridAxis a;
    a.h = h;
    a.count = 2 * std::max(half, 1) + 1;
    a.lo = -h * std::max(half, 1);
    return a;
}

} // namespace gexp
