#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "calderon/error.hpp"
#include "calderon/grid_function.hpp"

namespace calderon {

/// A real number stored as mantissa * exp(log_scale).
struct ScaledReal {
    double mantissa = 0.0;
    double log_scale = 0.0;

    double value() const { return mantissa * std::exp(log_scale); }
    /// log|x|; -inf for zero.
    double log_abs() const { return std::log(std::abs(mantissa)) + log_scale; }
    int sign() const { return (mantissa > 0) - (mantissa < 0); }
};

/// Solution data (value, derivative) * exp(log_scale).
///
/// The pair is renormalized by exact powers of two, so after every
/// renormalization max(|value|, |derivative|) lies in [0.5, 1).
struct ScaledSolution {
    double value = 0.0;
    double derivative = 0.0;
    double log_scale = 0.0;

    double true_value() const { return value * std::exp(log_scale); }
    double true_derivative() const { return derivative * std::exp(log_scale); }
    ScaledReal scaled_value() const { return {value, log_scale}; }
    ScaledReal scaled_derivative() const { return {derivative, log_scale}; }
};

enum class Endpoint { left = 0, right = 1 };

/// Solution samples on the grid nodes, all expressed relative to one common
/// log_scale (the largest one reached along the way).
struct Trajectory {
    GridFunction value;
    GridFunction derivative;
    double log_scale = 0.0;
};

struct IntegrationResult {
    ScaledSolution end;
    std::optional<Trajectory> trajectory;
    /// Sign changes of the solution strictly inside the integration range.
    int zero_count = 0;
    /// Unwrapped Pruefer angle of (value, derivative) at the far endpoint.
    double prufer_phase = 0.0;
};

struct IntegratorTolerances {
    double rtol = 1e-10;
    double atol = 1e-12;
};

namespace detail {

inline void renormalize(double& v, double& dv, double& log_scale) {
    const double m = std::max(std::abs(v), std::abs(dv));
    if (m == 0.0 || (m >= 1e-4 && m <= 1e4)) return;
    int e = 0;
    std::frexp(m, &e);
    v = std::ldexp(v, -e);
    dv = std::ldexp(dv, -e);
    log_scale += e * std::numbers::ln2;
}

}  // namespace detail

/// Integrates -v'' + Q(x) v = -mu v, i.e. v'' = (Q + mu) v, across [0,1].
///
/// Dormand-Prince 5(4) with adaptive substeps inside each grid interval, so the
/// right-hand side is polynomial on every step. The state is renormalized by
/// powers of two to keep exponentially growing solutions (large positive mu)
/// representable; `end.log_scale` carries the factored-out growth.
inline IntegrationResult integrate_schrodinger(const CubicInterpolant& q, double mu,
                                               double init_value, double init_derivative,
                                               Endpoint start, bool record_trajectory = false,
                                               IntegratorTolerances tol = {}) {
    if (!std::isfinite(mu) || !std::isfinite(init_value) || !std::isfinite(init_derivative)) {
        throw InvalidInput("integrate_schrodinger: non-finite input");
    }
    if (init_value == 0.0 && init_derivative == 0.0) {
        throw InvalidInput("integrate_schrodinger: initial data are both zero");
    }

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                            e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                            e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

    const std::size_t intervals = q.intervals();
    const std::size_t nodes = intervals + 1;
    const double h = q.step();
    const bool forward = start == Endpoint::left;
    const double dir = forward ? 1.0 : -1.0;

    double v = init_value;
    double dv = init_derivative;
    double log_scale = 0.0;
    detail::renormalize(v, dv, log_scale);

    std::vector<double> rec_v, rec_dv, rec_log;
    if (record_trajectory) {
        rec_v.resize(nodes);
        rec_dv.resize(nodes);
        rec_log.resize(nodes);
    }
    auto record = [&](std::size_t node) {
        if (!record_trajectory) return;
        rec_v[node] = v;
        rec_dv[node] = dv;
        rec_log[node] = log_scale;
    };
    record(forward ? 0 : intervals);

    int zeros = 0;
    int last_sign = (v > 0) - (v < 0);
    double substep = 1.0;  // in units of the local coordinate s

    for (std::size_t k = 0; k < intervals; ++k) {
        const std::size_t i = forward ? k : intervals - 1 - k;
        // local coordinate s runs 0 -> 1 (forward) or 1 -> 0 (backward)
        double s = forward ? 0.0 : 1.0;
        const double s_end = forward ? 1.0 : 0.0;
        auto coef = [&](double ss) { return q.local(i, ss) + mu; };

        double ds = std::min(substep, 1.0);
        while (dir * (s_end - s) > 0.0) {
            if (dir * (s + dir * ds - s_end) > 0.0) ds = dir * (s_end - s);
            const double dx = dir * ds * h;
            // y' = (dv, coef * v)
            const double k1v = dv, k1d = coef(s) * v;
            double yv = v + dx * a21 * k1v, yd = dv + dx * a21 * k1d;
            const double k2v = yd, k2d = coef(s + dir * c2 * ds) * yv;
            yv = v + dx * (a31 * k1v + a32 * k2v);
            yd = dv + dx * (a31 * k1d + a32 * k2d);
            const double k3v = yd, k3d = coef(s + dir * c3 * ds) * yv;
            yv = v + dx * (a41 * k1v + a42 * k2v + a43 * k3v);
            yd = dv + dx * (a41 * k1d + a42 * k2d + a43 * k3d);
            const double k4v = yd, k4d = coef(s + dir * c4 * ds) * yv;
            yv = v + dx * (a51 * k1v + a52 * k2v + a53 * k3v + a54 * k4v);
            yd = dv + dx * (a51 * k1d + a52 * k2d + a53 * k3d + a54 * k4d);
            const double k5v = yd, k5d = coef(s + dir * c5 * ds) * yv;
            yv = v + dx * (a61 * k1v + a62 * k2v + a63 * k3v + a64 * k4v + a65 * k5v);
            yd = dv + dx * (a61 * k1d + a62 * k2d + a63 * k3d + a64 * k4d + a65 * k5d);
            const double k6v = yd, k6d = coef(s + dir * ds) * yv;
            const double nv = v + dx * (b1 * k1v + b3 * k3v + b4 * k4v + b5 * k5v + b6 * k6v);
            const double nd = dv + dx * (b1 * k1d + b3 * k3d + b4 * k4d + b5 * k5d + b6 * k6d);
            const double k7v = nd, k7d = coef(s + dir * ds) * nv;
            const double ev =
                dx * (e1 * k1v + e3 * k3v + e4 * k4v + e5 * k5v + e6 * k6v + e7 * k7v);
            const double ed =
                dx * (e1 * k1d + e3 * k3d + e4 * k4d + e5 * k5d + e6 * k6d + e7 * k7d);

            if (!std::isfinite(nv) || !std::isfinite(nd)) {
                throw IntegratorFailure("non-finite state", (static_cast<double>(i) + s) * h);
            }
            const double sv = tol.atol + tol.rtol * std::max(std::abs(v), std::abs(nv));
            const double sd = tol.atol + tol.rtol * std::max(std::abs(dv), std::abs(nd));
            const double err = std::max(std::abs(ev) / sv, std::abs(ed) / sd);

            if (err <= 1.0) {
                s += dir * ds;
                v = nv;
                dv = nd;
                const int sg = (v > 0) - (v < 0);
                if (sg != 0) {
                    if (last_sign != 0 && sg != last_sign) ++zeros;
                    last_sign = sg;
                }
                detail::renormalize(v, dv, log_scale);
                const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                substep = std::min(1.0, ds * grow);
                ds = substep;
            } else {
                ds *= std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.5);
                if (ds * h < 1e-14) {
                    throw IntegratorFailure("step size underflow",
                                            (static_cast<double>(i) + s) * h);
                }
            }
        }
        record(forward ? i + 1 : i);
    }

    IntegrationResult result;
    result.end = {v, dv, log_scale};
    result.zero_count = zeros;
    double angle = std::atan2(v, dv);
    if (angle < 0.0) angle += std::numbers::pi;
    if (angle >= std::numbers::pi) angle -= std::numbers::pi;
    result.prufer_phase = zeros * std::numbers::pi + angle;

    if (record_trajectory) {
        const double ref = *std::max_element(rec_log.begin(), rec_log.end());
        for (std::size_t n = 0; n < nodes; ++n) {
            const double f = std::exp(rec_log[n] - ref);
            rec_v[n] *= f;
            rec_dv[n] *= f;
        }
        result.trajectory = Trajectory{GridFunction(std::move(rec_v)),
                                       GridFunction(std::move(rec_dv)), ref};
    }
    return result;
}

inline IntegrationResult integrate_schrodinger(const GridFunction& q, double mu, double init_value,
                                               double init_derivative, Endpoint start,
                                               bool record_trajectory = false) {
    return integrate_schrodinger(CubicInterpolant(q), mu, init_value, init_derivative, start,
                                 record_trajectory);
}

/// Tridiagonal coefficients; row i reads lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1].
/// Rows 0 and n-1 are replaced by the Dirichlet conditions.
template <class Real>
struct Tridiagonal {
    std::vector<Real> lower, diag, upper;

    std::size_t size() const noexcept { return diag.size(); }
};

/// Discretization of -u'' + a u with the standard three-point stencil.
template <class Real>
Tridiagonal<Real> second_difference_operator(std::span<const Real> a) {
    const std::size_t n = a.size();
    const Real h = Real(1) / static_cast<Real>(n - 1);
    const Real ih2 = Real(1) / (h * h);
    Tridiagonal<Real> t{std::vector<Real>(n, -ih2), std::vector<Real>(n), std::vector<Real>(n, -ih2)};
    for (std::size_t i = 0; i < n; ++i) t.diag[i] = 2 * ih2 + a[i];
    return t;
}

/// Fourth-order compact (Numerov) discretization of -u'' + a u; pair it with
/// numerov_rhs() for the source term.
template <class Real>
Tridiagonal<Real> numerov_operator(std::span<const Real> a) {
    const std::size_t n = a.size();
    const Real h = Real(1) / static_cast<Real>(n - 1);
    const Real ih2 = Real(1) / (h * h);
    Tridiagonal<Real> t{std::vector<Real>(n), std::vector<Real>(n), std::vector<Real>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        t.lower[i] = -ih2 + (i > 0 ? a[i - 1] : Real(0)) / 12;
        t.diag[i] = 2 * ih2 + 10 * a[i] / 12;
        t.upper[i] = -ih2 + (i + 1 < n ? a[i + 1] : Real(0)) / 12;
    }
    return t;
}

template <class Real>
std::vector<Real> numerov_rhs(std::span<const Real> g) {
    const std::size_t n = g.size();
    std::vector<Real> r(n, Real(0));
    for (std::size_t i = 1; i + 1 < n; ++i) r[i] = (g[i - 1] + 10 * g[i] + g[i + 1]) / 12;
    return r;
}

/// Thomas algorithm for the interior rows with Dirichlet end values.
template <class Real>
std::vector<Real> solve_dirichlet(const Tridiagonal<Real>& t, std::span<const Real> rhs, Real left,
                                  Real right) {
    const std::size_t n = t.size();
    if (n < 3 || rhs.size() != n || t.lower.size() != n || t.upper.size() != n) {
        throw InvalidInput("solve_dirichlet: inconsistent system sizes");
    }
    const std::size_t m = n - 2;
    std::vector<Real> c(m), d(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = k + 1;
        Real r = rhs[i];
        if (i == 1) r -= t.lower[i] * left;
        if (i == n - 2) r -= t.upper[i] * right;
        Real pivot = t.diag[i];
        if (k > 0) pivot -= t.lower[i] * c[k - 1];
        const Real scale = std::abs(t.diag[i]) + std::abs(t.lower[i]) + std::abs(t.upper[i]);
        if (!(std::abs(pivot) > std::numeric_limits<Real>::epsilon() * scale) ||
            !std::isfinite(static_cast<double>(pivot))) {
            throw SingularSystem("tridiagonal factorization: zero pivot at row " +
                                 std::to_string(i));
        }
        c[k] = (i == n - 2) ? Real(0) : t.upper[i] / pivot;
        d[k] = (r - (k > 0 ? t.lower[i] * d[k - 1] : Real(0))) / pivot;
    }
    std::vector<Real> u(n);
    u[0] = left;
    u[n - 1] = right;
    for (std::size_t k = m; k-- > 0;) u[k + 1] = d[k] - (k + 1 < m ? c[k] * u[k + 2] : Real(0));
    return u;
}

/// Relative residual max_i |row_i(u) - rhs_i| / max_i (|row terms| + |rhs_i|) over interior rows.
template <class Real>
Real banded_residual(const Tridiagonal<Real>& t, std::span<const Real> rhs, std::span<const Real> u) {
    Real num = 0, den = 0;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        const Real l = t.lower[i] * u[i - 1], d = t.diag[i] * u[i], r = t.upper[i] * u[i + 1];
        num = std::max(num, std::abs(l + d + r - rhs[i]));
        den = std::max(den, std::abs(l) + std::abs(d) + std::abs(r) + std::abs(rhs[i]));
    }
    return den == 0 ? Real(0) : num / den;
}

inline GridFunction solve_banded_bvp(const Tridiagonal<double>& t, const GridFunction& rhs,
                                     double left_value, double right_value) {
    return GridFunction(solve_dirichlet<double>(t, rhs.values(), left_value, right_value));
}

/// Bracketed root: bisection down to width 1e-6 (relative to |x| when large),
/// then Illinois-modified secant down to `tol`.
template <class Fn>
double find_root(Fn&& fn, double a, double b, double tol = 1e-12) {
    if (a > b) std::swap(a, b);
    double fa = fn(a), fb = fn(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (!std::isfinite(fa) || !std::isfinite(fb) || (fa > 0) == (fb > 0)) {
        throw BracketError("find_root: no sign change on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]");
    }
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    const double tol_eff = std::max(tol, 4 * std::numeric_limits<double>::epsilon() * scale);
    const double coarse = std::max(1e-6 * scale, tol_eff);

    while (b - a > coarse) {
        const double m = 0.5 * (a + b);
        const double fm = fn(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }

    int side = 0;
    double x = 0.5 * (a + b);
    for (int it = 0; it < 100 && b - a > tol_eff; ++it) {
        const double prev = x;
        x = (a * fb - b * fa) / (fb - fa);
        if (!(x > a && x < b)) x = 0.5 * (a + b);
        const double fx = fn(x);
        if (fx == 0.0) return x;
        if ((fx > 0) == (fa > 0)) {
            a = x;
            fa = fx;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = x;
            fb = fx;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
        if (std::abs(x - prev) < 0.5 * tol_eff && b - a > tol_eff) {
            // Close the bracket around the converged secant iterate.
            const double lo = std::max(a, x - 0.5 * tol_eff);
            const double hi = std::min(b, x + 0.5 * tol_eff);
            const double flo = fn(lo), fhi = fn(hi);
            if (flo == 0.0) return lo;
            if (fhi == 0.0) return hi;
            if ((flo > 0) != (fhi > 0)) return 0.5 * (lo + hi);
            if ((flo > 0) == (fa > 0)) {
                a = hi;
                fa = fhi;
            } else {
                b = lo;
                fb = flo;
            }
        }
    }
    return 0.5 * (a + b);
}

/// Composite Simpson on odd grids; even grids use Simpson on the first n-1
/// points and the trapezoid rule on the last panel.
inline double integrate_grid(const GridFunction& g) {
    const std::size_t n = g.size();
    const double h = g.step();
    const std::size_t last = (n % 2 == 1) ? n - 1 : n - 2;
    double s = g[0] + g[last];
    for (std::size_t i = 1; i < last; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * g[i];
    double total = s * h / 3.0;
    if (last != n - 1) total += 0.5 * h * (g[n - 2] + g[n - 1]);
    return total;
}

/// Runs fn(i) for i in [0, count) on `jobs` threads. Work is claimed by index
/// and results are expected to be written per index, so the outcome does not
/// depend on scheduling. The exception with the lowest index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = count;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t n_threads = std::min(jobs, count);
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace calderon
