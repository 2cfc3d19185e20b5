#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "igame/errors.hpp"

namespace igame {

/// Largest supported state dimension for grid-based solvers.
inline constexpr std::size_t kMaxDim = 2;

using Point = std::array<double, kMaxDim>;

/// Uniform axis whose nodes are the integer multiples of `step` inside a box.
///
/// Node i sits at (first + i) * step. Anchoring nodes to multiples of the step
/// keeps the origin on the grid and makes coarse nodes a subset of the nodes of
/// any refinement by an integer factor.
class Axis {
public:
    Axis() = default;

    /// Nodes k*step with lo <= k*step <= hi (up to a relative 1e-9 slack).
    static Axis aligned(double lo, double hi, double step) {
        if (!(step > 0.0) || !std::isfinite(step))
            throw ValidationError("axis step must be positive and finite");
        if (!(lo < hi)) throw ValidationError("axis bounds must satisfy lo < hi");
        const double slack = 1e-9;
        const auto first = static_cast<long>(std::ceil(lo / step - slack));
        const auto last = static_cast<long>(std::floor(hi / step + slack));
        if (last - first < 1) throw ValidationError("axis holds fewer than two nodes");
        Axis a;
        a.first_ = first;
        a.count_ = static_cast<std::size_t>(last - first + 1);
        a.step_ = step;
        return a;
    }

    std::size_t size() const { return count_; }
    double step() const { return step_; }
    long first_multiple() const { return first_; }
    double node(std::size_t i) const { return static_cast<double>(first_ + static_cast<long>(i)) * step_; }
    double min() const { return node(0); }
    double max() const { return node(count_ - 1); }

    /// Fractional node index of coordinate x.
    double position(double x) const { return x / step_ - static_cast<double>(first_); }

private:
    long first_ = 0;
    std::size_t count_ = 0;
    double step_ = 1.0;
};

/// Tensor grid of one or two axes; flat index is row-major (last axis fastest).
class Grid {
public:
    Grid() = default;

    explicit Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
        if (axes_.empty() || axes_.size() > kMaxDim)
            throw ValidationError("grid dimension must be 1 or 2");
        size_ = 1;
        for (const auto& a : axes_) size_ *= a.size();
    }

    std::size_t dim() const { return axes_.size(); }
    std::size_t size() const { return size_; }
    const Axis& axis(std::size_t a) const { return axes_[a]; }
    const std::vector<Axis>& axes() const { return axes_; }

    std::array<std::size_t, kMaxDim> multi_index(std::size_t flat) const {
        std::array<std::size_t, kMaxDim> idx{};
        if (dim() == 1) {
            idx[0] = flat;
        } else {
            idx[0] = flat / axes_[1].size();
            idx[1] = flat % axes_[1].size();
        }
        return idx;
    }

    std::size_t flat_index(const std::array<std::size_t, kMaxDim>& idx) const {
        return dim() == 1 ? idx[0] : idx[0] * axes_[1].size() + idx[1];
    }

    Point coords(std::size_t flat) const {
        Point p{};
        const auto idx = multi_index(flat);
        for (std::size_t a = 0; a < dim(); ++a) p[a] = axes_[a].node(idx[a]);
        return p;
    }

    /// Flat-index stride of axis a.
    std::size_t stride(std::size_t a) const { return (dim() == 2 && a == 0) ? axes_[1].size() : 1; }

    bool on_boundary(std::size_t flat) const {
        const auto idx = multi_index(flat);
        for (std::size_t a = 0; a < dim(); ++a)
            if (idx[a] == 0 || idx[a] + 1 == axes_[a].size()) return true;
        return false;
    }

    /// True when the node lies in the centred sub-box holding `fraction` of
    /// each axis' extent.
    bool in_interior(std::size_t flat, double fraction) const {
        const auto p = coords(flat);
        for (std::size_t a = 0; a < dim(); ++a) {
            const double centre = 0.5 * (axes_[a].min() + axes_[a].max());
            const double half = 0.5 * (axes_[a].max() - axes_[a].min()) * fraction;
            if (std::abs(p[a] - centre) > half + 1e-12 * (1.0 + half)) return false;
        }
        return true;
    }

    bool same_as(const Grid& o) const {
        if (dim() != o.dim()) return false;
        for (std::size_t a = 0; a < dim(); ++a) {
            if (axes_[a].size() != o.axes_[a].size() || axes_[a].step() != o.axes_[a].step() ||
                axes_[a].first_multiple() != o.axes_[a].first_multiple())
                return false;
        }
        return true;
    }

private:
    std::vector<Axis> axes_;
    std::size_t size_ = 0;
};

namespace detail {

/// Snaps a fractional index to the nearest integer when within 1e-9.
inline double snap(double pos) {
    const double r = std::round(pos);
    return std::abs(pos - r) <= 1e-9 ? r : pos;
}

}  // namespace detail

/// Whether a point lies inside the grid box (closed, with a 1e-9 node slack).
inline bool grid_contains(const Grid& g, std::span<const double> x) {
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const double pos = detail::snap(g.axis(a).position(x[a]));
        if (pos < 0.0 || pos > static_cast<double>(g.axis(a).size() - 1)) return false;
    }
    return true;
}

/// Multilinear interpolation of nodal values; x must lie in the grid box.
inline double interpolate(const Grid& g, std::span<const double> values, std::span<const double> x) {
    std::array<std::size_t, kMaxDim> lo{};
    std::array<double, kMaxDim> w{};
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const double pos = detail::snap(g.axis(a).position(x[a]));
        const auto last = static_cast<double>(g.axis(a).size() - 1);
        if (pos < 0.0 || pos > last) throw DomainError("interpolation point outside grid box");
        double base = std::floor(pos);
        if (base >= last) base = last - 1.0;
        lo[a] = static_cast<std::size_t>(base);
        w[a] = pos - base;
    }
    if (g.dim() == 1) {
        const std::size_t i = lo[0];
        if (w[0] == 0.0) return values[i];
        return (1.0 - w[0]) * values[i] + w[0] * values[i + 1];
    }
    double acc = 0.0;
    for (int c0 = 0; c0 < 2; ++c0) {
        const double w0 = c0 ? w[0] : 1.0 - w[0];
        if (w0 == 0.0) continue;
        for (int c1 = 0; c1 < 2; ++c1) {
            const double w1 = c1 ? w[1] : 1.0 - w[1];
            if (w1 == 0.0) continue;
            acc += w0 * w1 * values[g.flat_index({lo[0] + c0, lo[1] + c1})];
        }
    }
    return acc;
}

/// Index of the node nearest to x, clamped into the box.
inline std::size_t nearest_node(const Grid& g, std::span<const double> x) {
    std::array<std::size_t, kMaxDim> idx{};
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const double pos = std::round(g.axis(a).position(x[a]));
        const auto last = static_cast<double>(g.axis(a).size() - 1);
        idx[a] = static_cast<std::size_t>(std::clamp(pos, 0.0, last));
    }
    return g.flat_index(idx);
}

}  // namespace igame
