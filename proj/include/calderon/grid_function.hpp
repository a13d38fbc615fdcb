#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "calderon/error.hpp"

namespace calderon {

/// Real samples on the uniform grid x_i = i/(n-1) over [0,1].
///
/// Carrier for potentials, eigenfunctions, conformal profiles. Every value is
/// finite and the grid has at least kMinPoints nodes; both are checked on
/// construction.
class GridFunction {
public:
    static constexpr std::size_t kMinPoints = 33;
    static constexpr std::size_t kDefaultPoints = 2049;

    GridFunction() = default;

    explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < kMinPoints) {
            throw InvalidInput("GridFunction needs at least " + std::to_string(kMinPoints) +
                               " points, got " + std::to_string(values_.size()));
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw InvalidInput("GridFunction value at index " + std::to_string(i) +
                                   " is not finite");
            }
        }
    }

    static GridFunction constant(std::size_t n_points, double value) {
        return GridFunction(std::vector<double>(n_points, value));
    }

    template <class Fn>
    static GridFunction sample(std::size_t n_points, Fn&& fn) {
        if (n_points < 2) throw InvalidInput("GridFunction::sample needs n_points >= 2");
        std::vector<double> v(n_points);
        const double h = 1.0 / static_cast<double>(n_points - 1);
        for (std::size_t i = 0; i < n_points; ++i) v[i] = fn(static_cast<double>(i) * h);
        return GridFunction(std::move(v));
    }

    std::size_t size() const noexcept { return values_.size(); }
    double step() const noexcept { return 1.0 / static_cast<double>(values_.size() - 1); }
    double x(std::size_t i) const noexcept { return static_cast<double>(i) * step(); }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double front() const noexcept { return values_.front(); }
    double back() const noexcept { return values_.back(); }

    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }

    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Pointwise map; the result is validated like any other GridFunction.
    template <class Fn>
    GridFunction map(Fn&& fn) const {
        std::vector<double> out(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) out[i] = fn(values_[i]);
        return GridFunction(std::move(out));
    }

    /// Pointwise combination with another function on the same grid.
    template <class Fn>
    GridFunction zip(const GridFunction& other, Fn&& fn) const {
        require_same_grid(other);
        std::vector<double> out(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) out[i] = fn(values_[i], other.values_[i]);
        return GridFunction(std::move(out));
    }

    void require_same_grid(const GridFunction& other) const {
        if (other.size() != size()) {
            throw InvalidInput("grid size mismatch: " + std::to_string(size()) + " vs " +
                               std::to_string(other.size()));
        }
    }

    friend bool operator==(const GridFunction&, const GridFunction&) = default;

private:
    std::vector<double> values_;
};

inline double sup_distance(const GridFunction& a, const GridFunction& b) {
    a.require_same_grid(b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

namespace detail {

// Power-basis coefficients of the four Lagrange cardinal polynomials on the
// integer nodes {first, first+1, first+2, first+3}.
inline std::array<std::array<double, 4>, 4> lagrange_basis(int first) {
    std::array<std::array<double, 4>, 4> basis{};
    for (int m = 0; m < 4; ++m) {
        std::array<double, 4> poly{1.0, 0.0, 0.0, 0.0};
        double denom = 1.0;
        for (int q = 0; q < 4; ++q) {
            if (q == m) continue;
            const double root = first + q;
            // poly *= (s - root)
            for (int d = 3; d >= 1; --d) poly[d] = poly[d - 1] - root * poly[d];
            poly[0] = -root * poly[0];
            denom *= static_cast<double>(m - q);
        }
        for (int d = 0; d < 4; ++d) basis[m][d] = poly[d] / denom;
    }
    return basis;
}

}  // namespace detail

/// Piecewise cubic interpolant of a GridFunction.
///
/// On [x_i, x_{i+1}] the interpolant is the cubic through the four nearest
/// nodes (i-1..i+2, shifted inward at the ends), stored in powers of the local
/// coordinate s = (x - x_i)/h. Each piece is a polynomial, so integrators that
/// step node to node see smooth coefficients.
class CubicInterpolant {
public:
    explicit CubicInterpolant(const GridFunction& g) : h_(g.step()), coeffs_(g.size() - 1) {
        const auto interior = detail::lagrange_basis(-1);
        const auto left = detail::lagrange_basis(0);
        const auto right = detail::lagrange_basis(-2);
        const std::size_t n = g.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            std::size_t first;
            const std::array<std::array<double, 4>, 4>* basis;
            if (i == 0) {
                first = 0;
                basis = &left;
            } else if (i + 2 >= n) {
                first = n - 4;
                basis = &right;
            } else {
                first = i - 1;
                basis = &interior;
            }
            std::array<double, 4> c{};
            for (int m = 0; m < 4; ++m) {
                const double y = g[first + static_cast<std::size_t>(m)];
                for (int d = 0; d < 4; ++d) c[d] += y * (*basis)[m][d];
            }
            coeffs_[i] = c;
        }
    }

    std::size_t intervals() const noexcept { return coeffs_.size(); }
    double step() const noexcept { return h_; }

    /// Evaluate on interval i at local coordinate s in [0,1].
    double local(std::size_t i, double s) const noexcept {
        const auto& c = coeffs_[i];
        return c[0] + s * (c[1] + s * (c[2] + s * c[3]));
    }

    double operator()(double x) const noexcept {
        const double t = std::clamp(x, 0.0, 1.0) / h_;
        std::size_t i = static_cast<std::size_t>(t);
        if (i >= coeffs_.size()) i = coeffs_.size() - 1;
        return local(i, t - static_cast<double>(i));
    }

    /// Exact integral of the interpolant over interval i.
    double interval_integral(std::size_t i) const noexcept {
        const auto& c = coeffs_[i];
        return h_ * (c[0] + c[1] / 2.0 + c[2] / 3.0 + c[3] / 4.0);
    }

private:
    double h_;
    std::vector<std::array<double, 4>> coeffs_;
};

/// First derivative by fourth-order finite differences (one-sided at the ends).
inline GridFunction differentiate(const GridFunction& g) {
    const std::size_t n = g.size();
    const double h = g.step();
    std::vector<double> d(n);
    auto f = [&](std::size_t i) { return g[i]; };
    d[0] = (-25 * f(0) + 48 * f(1) - 36 * f(2) + 16 * f(3) - 3 * f(4)) / (12 * h);
    d[1] = (-3 * f(0) - 10 * f(1) + 18 * f(2) - 6 * f(3) + f(4)) / (12 * h);
    for (std::size_t i = 2; i + 2 < n; ++i) {
        d[i] = (f(i - 2) - 8 * f(i - 1) + 8 * f(i + 1) - f(i + 2)) / (12 * h);
    }
    const std::size_t m = n - 1;
    d[m] = (25 * f(m) - 48 * f(m - 1) + 36 * f(m - 2) - 16 * f(m - 3) + 3 * f(m - 4)) / (12 * h);
    d[m - 1] = (3 * f(m) + 10 * f(m - 1) - 18 * f(m - 2) + 6 * f(m - 3) - f(m - 4)) / (12 * h);
    return GridFunction(std::move(d));
}

/// Second derivative by fourth-order finite differences (one-sided at the ends).
inline GridFunction differentiate2(const GridFunction& g) {
    const std::size_t n = g.size();
    const double h2 = g.step() * g.step();
    std::vector<double> d(n);
    auto f = [&](std::size_t i) { return g[i]; };
    d[0] = (45 * f(0) - 154 * f(1) + 214 * f(2) - 156 * f(3) + 61 * f(4) - 10 * f(5)) / (12 * h2);
    d[1] = (10 * f(0) - 15 * f(1) - 4 * f(2) + 14 * f(3) - 6 * f(4) + f(5)) / (12 * h2);
    for (std::size_t i = 2; i + 2 < n; ++i) {
        d[i] = (-f(i - 2) + 16 * f(i - 1) - 30 * f(i) + 16 * f(i + 1) - f(i + 2)) / (12 * h2);
    }
    const std::size_t m = n - 1;
    d[m] = (45 * f(m) - 154 * f(m - 1) + 214 * f(m - 2) - 156 * f(m - 3) + 61 * f(m - 4) -
            10 * f(m - 5)) / (12 * h2);
    d[m - 1] = (10 * f(m) - 15 * f(m - 1) - 4 * f(m - 2) + 14 * f(m - 3) - 6 * f(m - 4) +
                f(m - 5)) / (12 * h2);
    return GridFunction(std::move(d));
}

/// tail[i] = integral of g from x_i to 1, using the cubic interpolant per interval.
inline GridFunction tail_integral(const GridFunction& g) {
    const CubicInterpolant p(g);
    std::vector<double> tail(g.size(), 0.0);
    for (std::size_t i = g.size() - 1; i-- > 0;) tail[i] = tail[i + 1] + p.interval_integral(i);
    return GridFunction(std::move(tail));
}

}  // namespace calderon
