#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calderon/error.hpp"
#include "calderon/geometry.hpp"
#include "calderon/grid_function.hpp"
#include "calderon/numerics.hpp"

namespace calderon {

/// Delta_g w + (lambda - V) w - lambda w^p = 0 on the warped cylinder,
/// w = eta0 at x=0 and eta1 at x=1, p = (n+2)/(n-2).
struct YamabeProblem {
    WarpingProfile f;
    double lambda = 0.0;
    GridFunction v;
    double eta0 = 1.0;
    double eta1 = 1.0;

    YamabeProblem(WarpingProfile f_, double lambda_, GridFunction v_, double eta0_, double eta1_)
        : f(std::move(f_)), lambda(lambda_), v(std::move(v_)), eta0(eta0_), eta1(eta1_) {
        if (f.n_dim() < 3) throw InvalidInput("YamabeProblem: n_dim must be >= 3");
        if (!(eta0 > 0.0) || !(eta1 > 0.0)) throw InvalidInput("YamabeProblem: boundary values must be positive");
        if (!std::isfinite(lambda)) throw InvalidInput("YamabeProblem: lambda must be finite");
        f.f().require_same_grid(v);
    }

    int n_dim() const noexcept { return f.n_dim(); }
    double exponent() const noexcept { return (n_dim() + 2.0) / (n_dim() - 2.0); }
    double eta_min() const noexcept { return std::min(eta0, eta1); }
    double eta_max() const noexcept { return std::max(eta0, eta1); }
    bool potential_is_zero() const { return v.sup_norm() == 0.0; }
    std::size_t size() const noexcept { return v.size(); }
};

/// Ordered pair of lower/upper solutions and the construction that produced it.
struct LowerUpper {
    GridFunction lower;
    GridFunction upper;
    std::string case_tag;
};

struct IterationReport {
    std::vector<GridFunction> iterates;
    std::vector<double> residuals;
    double damping = 0.0;
    bool monotone = true;
    bool sandwich = true;
    bool residuals_decreasing = true;
    bool converged = false;
    /// Largest decrease w_{k+1} - w_k < 0 seen (0 when monotone).
    double worst_monotone_violation = 0.0;

    std::size_t iterations() const noexcept { return iterates.empty() ? 0 : iterates.size() - 1; }
    double final_residual() const { return residuals.empty() ? 0.0 : residuals.back(); }
};

struct IterationOptions {
    std::size_t max_iters = 500;
    double increment_tol = 1e-12;
    std::size_t increment_repeats = 3;
    double residual_tol = 1e-9;
    double monotone_slack = 1e-12;
};

namespace detail {

using Ld = long double;

/// Grid data of a problem converted once to extended precision.
template <class Real>
struct ReducedGrid {
    std::size_t n;
    std::vector<Real> f, q_f, f4, f_nm2, f_np2, v;
    Real lambda, p;

    explicit ReducedGrid(const YamabeProblem& pb)
        : n(pb.size()), f(n), q_f(n), f4(n), f_nm2(n), f_np2(n), v(n),
          lambda(static_cast<Real>(pb.lambda)), p(static_cast<Real>(pb.exponent())) {
        const auto qf = pb.f.q_f();
        const Real a = static_cast<Real>(pb.n_dim() - 2);
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = static_cast<Real>(pb.f.f()[i]);
            q_f[i] = static_cast<Real>(qf[i]);
            f4[i] = f[i] * f[i] * f[i] * f[i];
            f_nm2[i] = std::pow(f[i], a);
            f_np2[i] = f_nm2[i] * f4[i];
            v[i] = static_cast<Real>(pb.v[i]);
        }
    }

    Real nonlinearity(std::size_t i, Real w) const { return (lambda - v[i]) * w - lambda * std::pow(w, p); }
};

/// Solves Delta_g phi - s phi = -r with phi = eta at the ends, via the compact
/// scheme for u = f^{n-2} phi:  -u'' + (q_f + s f^4) u = f^{n+2} r.
template <class Real>
std::vector<Real> solve_linear(const ReducedGrid<Real>& g, const std::vector<Real>& s, const std::vector<Real>& r,
                               Real eta0, Real eta1) {
    std::vector<Real> a(g.n), src(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        a[i] = g.q_f[i] + s[i] * g.f4[i];
        src[i] = g.f_np2[i] * r[i];
    }
    const auto t = numerov_operator<Real>(a);
    const auto rhs = numerov_rhs<Real>(src);
    auto u = solve_dirichlet<Real>(t, rhs, g.f_nm2.front() * eta0, g.f_nm2.back() * eta1);
    for (std::size_t i = 0; i < g.n; ++i) u[i] /= g.f_nm2[i];
    return u;
}

/// Discrete Delta_g w + F(x, w) at interior nodes, in operator units.
/// Boundary values are the Dirichlet data eta, so a lower or upper solution
/// that does not match eta is charged for the jump at the first interior node.
template <class Real>
std::vector<Real> discrete_operator(const ReducedGrid<Real>& g, const std::vector<Real>& w, Real eta0, Real eta1) {
    const Real h = Real(1) / static_cast<Real>(g.n - 1);
    const Real ih2 = Real(1) / (h * h);
    std::vector<Real> u(g.n), qu(g.n), src(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const Real wi = i == 0 ? eta0 : (i + 1 == g.n ? eta1 : w[i]);
        u[i] = g.f_nm2[i] * wi;
        qu[i] = g.q_f[i] * u[i];
        src[i] = g.f_np2[i] * g.nonlinearity(i, wi);
    }
    std::vector<Real> out(g.n, Real(0));
    for (std::size_t i = 1; i + 1 < g.n; ++i) {
        // f^{n+2} (Delta_g w + F) = u'' - q_f u + f^{n+2} F, compact-averaged
        const Real d2 = (u[i + 1] - 2 * u[i] + u[i - 1]) * ih2;
        const Real lower_order = (-(qu[i - 1] + 10 * qu[i] + qu[i + 1]) + (src[i - 1] + 10 * src[i] + src[i + 1])) / 12;
        out[i] = (d2 + lower_order) / g.f_np2[i];
    }
    return out;
}

template <class Real>
Real sup_interior(const std::vector<Real>& r) {
    Real m = 0;
    for (std::size_t i = 1; i + 1 < r.size(); ++i) m = std::max(m, std::abs(r[i]));
    return m;
}

template <class Real>
std::vector<Real> to_real(const GridFunction& g) {
    std::vector<Real> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = static_cast<Real>(g[i]);
    return out;
}

template <class Real>
GridFunction to_grid(const std::vector<Real>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
    return GridFunction(std::move(out));
}

inline constexpr double kInequalitySlack = 1e-9;

/// Rounding floor of the discrete operator applied to double input data:
/// a relative error eps in f or q_f is amplified by 4/h^2 in the second difference.
template <class Real>
Real rounding_floor(const ReducedGrid<Real>& g, const std::vector<Real>& w) {
    Real umax = 0, fmin = g.f_np2.front();
    for (std::size_t i = 0; i < g.n; ++i) {
        umax = std::max(umax, std::abs(g.f_nm2[i] * w[i]));
        fmin = std::min(fmin, g.f_np2[i]);
    }
    const Real h = Real(1) / static_cast<Real>(g.n - 1);
    const Real eps = static_cast<Real>(std::numeric_limits<double>::epsilon());
    return 16 * eps * umax * 4 / (h * h) / fmin;
}

/// Sign check of the defining inequalities; returns the offending x or nothing.
template <class Real>
std::optional<double> inequality_violation(const ReducedGrid<Real>& g, const std::vector<Real>& w, bool lower,
                                           Real eta0, Real eta1, bool strict = false) {
    const Real bslack = static_cast<Real>(1e-12);
    if (lower ? (w.front() > eta0 + bslack || w.back() > eta1 + bslack)
              : (w.front() < eta0 - bslack || w.back() < eta1 - bslack)) {
        return w.front() != eta0 ? 0.0 : 1.0;
    }
    const auto op = discrete_operator(g, w, eta0, eta1);
    const Real slack = strict ? Real(0) : std::max(static_cast<Real>(kInequalitySlack), rounding_floor(g, w));
    for (std::size_t i = 1; i + 1 < g.n; ++i) {
        const bool bad = lower ? (strict ? !(op[i] > 0) : op[i] < -slack) : op[i] > slack;
        if (bad) return static_cast<double>(i) / static_cast<double>(g.n - 1);
    }
    return std::nullopt;
}

}  // namespace detail

/// Lower and upper solutions following the admissibility cases:
///   "1a"/"1b"/"1c"/"trivial": V = 0, lambda >= 0, constants built from eta and 1;
///   "2":        V = 0, lambda < 0, eta <= 1, linear solves for both bounds;
///   "linear":   lambda = 0, V >= 0 (upper = max eta, lower = linear solve);
///   "3":        lambda > 0, 0 <= V < lambda, max eta >= 1, lower = eps, upper = max eta;
///   "4":        lambda <= 0, V >= 0, eta <= 1, linear solves for both bounds;
///   "extended": lambda > 0, any V; upper = large constant, lower = linear solve.
/// Every candidate is sign-checked on the grid before it is returned.
inline LowerUpper lower_upper_solutions(const YamabeProblem& pb) {
    using detail::Ld;
    const detail::ReducedGrid<Ld> g(pb);
    const std::size_t n = pb.size();
    const Ld e0 = pb.eta0, e1 = pb.eta1;
    const Ld emin = pb.eta_min(), emax = pb.eta_max();
    const Ld lam = pb.lambda, p = pb.exponent();
    const double vmin = pb.v.min(), vmax = pb.v.max();
    auto constant = [n](Ld c) { return std::vector<Ld>(n, c); };

    std::vector<Ld> lower, upper;
    std::string tag;
    auto try_case = [&]() -> bool {
        if (pb.potential_is_zero() && pb.lambda >= 0.0) {
            if (pb.eta0 == 1.0 && pb.eta1 == 1.0) tag = "trivial";
            else if (emin >= 1) tag = "1a";
            else if (emax <= 1) tag = "1b";
            else tag = "1c";
            lower = constant(std::min<Ld>(emin, 1));
            upper = constant(std::max<Ld>(emax, 1));
            return true;
        }
        if (pb.potential_is_zero() && pb.lambda < 0.0 && emax <= 1) {
            tag = "2";
            lower = detail::solve_linear<Ld>(g, constant(-lam), constant(0), e0, e1);
            upper = detail::solve_linear<Ld>(g, constant(-lam), constant(-lam * std::pow(emax, p)), e0, e1);
            return true;
        }
        if (pb.lambda == 0.0 && vmin >= 0.0) {
            tag = "linear";
            std::vector<Ld> s(n);
            for (std::size_t i = 0; i < n; ++i) s[i] = g.v[i];
            lower = detail::solve_linear<Ld>(g, s, constant(0), e0, e1);
            upper = constant(emax);
            return true;
        }
        if (pb.lambda > 0.0 && vmin >= 0.0 && vmax < pb.lambda && emax >= 1) {
            tag = "3";
            upper = constant(emax);
            for (Ld eps = 0.1L; eps >= 1e-12L; eps /= 10) {
                if (eps > emin) continue;
                auto cand = constant(eps);
                if (!detail::inequality_violation(g, cand, true, e0, e1, true)) {
                    lower = std::move(cand);
                    return true;
                }
            }
            throw InvalidInput("lower_upper_solutions: no eps in {1e-1, ..., 1e-12} satisfies the lower inequality");
        }
        if (pb.lambda <= 0.0 && vmin >= 0.0 && emax <= 1) {
            tag = "4";
            std::vector<Ld> s(n), r(n);
            const Ld mp = std::pow(emax, p);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = g.v[i] - lam;
                r[i] = (g.v[i] - lam) * mp;
            }
            lower = detail::solve_linear<Ld>(g, s, constant(0), e0, e1);
            upper = detail::solve_linear<Ld>(g, s, r, e0, e1);
            return true;
        }
        if (pb.lambda > 0.0) {
            tag = "extended";
            const Ld m_up = std::max<Ld>(emax, std::pow((lam - static_cast<Ld>(vmin)) / lam, 1 / (p - 1)));
            upper = constant(m_up);
            std::vector<Ld> s(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = std::max<Ld>(g.v[i] - lam, 0) + lam * std::pow(emax, p - 1);
            }
            lower = detail::solve_linear<Ld>(g, s, constant(0), e0, e1);
            return true;
        }
        return false;
    };
    if (!try_case()) {
        throw InvalidInput("lower_upper_solutions: no admissible case for lambda=" + std::to_string(pb.lambda) +
                           ", V in [" + std::to_string(vmin) + ", " + std::to_string(vmax) + "], eta=(" +
                           std::to_string(pb.eta0) + ", " + std::to_string(pb.eta1) +
                           "); lambda <= 0 needs V >= 0 and eta <= 1");
    }
    if (auto x = detail::inequality_violation(g, lower, true, e0, e1)) {
        throw InvalidInput("lower solution (case " + tag + ") fails its inequality at x=" + std::to_string(*x));
    }
    if (auto x = detail::inequality_violation(g, upper, false, e0, e1)) {
        throw InvalidInput("upper solution (case " + tag + ") fails its inequality at x=" + std::to_string(*x));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (lower[i] > upper[i] + static_cast<Ld>(1e-12)) {
            throw InvalidInput("lower solution exceeds upper solution at x=" +
                               std::to_string(static_cast<double>(i) / static_cast<double>(n - 1)));
        }
    }
    return {detail::to_grid(lower), detail::to_grid(upper), tag};
}

/// Discrete residual sup |Delta_g w + F(x, w)| over interior nodes.
inline double yamabe_residual(const YamabeProblem& pb, const GridFunction& w) {
    const detail::ReducedGrid<detail::Ld> g(pb);
    return static_cast<double>(detail::sup_interior(
        detail::discrete_operator<detail::Ld>(g, detail::to_real<detail::Ld>(w), pb.eta0, pb.eta1)));
}

/// Damping constant: max |lambda - V| + |lambda| p (max upper)^{p-1}.
inline double damping_constant(const YamabeProblem& pb, const GridFunction& upper) {
    double m = 0.0;
    for (std::size_t i = 0; i < pb.size(); ++i) m = std::max(m, std::abs(pb.lambda - pb.v[i]));
    const double p = pb.exponent();
    return m + std::abs(pb.lambda) * p * std::pow(upper.max(), p - 1.0);
}

struct YamabeSolution {
    GridFunction w;
    IterationReport report;
};

/// Sub/supersolution iteration Delta_g w_{k+1} - mu w_{k+1} = -mu w_k - F(x, w_k).
inline YamabeSolution monotone_iterate(const YamabeProblem& pb, const GridFunction& lower, const GridFunction& upper,
                                       const IterationOptions& opt = {}) {
    using detail::Ld;
    lower.require_same_grid(pb.v);
    upper.require_same_grid(pb.v);
    for (std::size_t i = 0; i < pb.size(); ++i) {
        if (lower[i] > upper[i] + opt.monotone_slack) throw InvalidInput("monotone_iterate: lower > upper");
    }
    const detail::ReducedGrid<Ld> g(pb);
    const std::size_t n = pb.size();
    const Ld mu = damping_constant(pb, upper);
    const auto lo = detail::to_real<Ld>(lower);
    const auto up = detail::to_real<Ld>(upper);
    const Ld slack = opt.monotone_slack;

    IterationReport rep;
    rep.damping = static_cast<double>(mu);
    std::vector<Ld> w = lo;
    auto record = [&](const std::vector<Ld>& it) {
        rep.iterates.push_back(detail::to_grid(it));
        const double r = static_cast<double>(detail::sup_interior(detail::discrete_operator<Ld>(g, it, pb.eta0, pb.eta1)));
        if (!rep.residuals.empty() && rep.residuals.back() > opt.residual_tol && r > rep.residuals.back()) {
            rep.residuals_decreasing = false;
        }
        rep.residuals.push_back(r);
        return r;
    };
    record(w);

    const std::vector<Ld> s(n, mu);
    std::vector<Ld> r(n);
    std::size_t quiet = 0;
    for (std::size_t k = 0; k < opt.max_iters; ++k) {
        for (std::size_t i = 0; i < n; ++i) r[i] = mu * w[i] + g.nonlinearity(i, w[i]);
        auto next = detail::solve_linear<Ld>(g, s, r, static_cast<Ld>(pb.eta0), static_cast<Ld>(pb.eta1));
        Ld inc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Ld d = next[i] - w[i];
            inc = std::max(inc, std::abs(d));
            if (d < -slack) {
                rep.monotone = false;
                rep.worst_monotone_violation = std::max(rep.worst_monotone_violation, static_cast<double>(-d));
            }
            if (next[i] < lo[i] - slack || next[i] > up[i] + slack) rep.sandwich = false;
        }
        w = std::move(next);
        const double res = record(w);
        quiet = inc < static_cast<Ld>(opt.increment_tol) ? quiet + 1 : 0;
        if (!rep.monotone) {
            throw ConvergenceError("monotone_iterate: iterate " + std::to_string(k + 1) + " decreased by " +
                                   std::to_string(rep.worst_monotone_violation));
        }
        if (!rep.sandwich) {
            throw ConvergenceError("monotone_iterate: iterate " + std::to_string(k + 1) +
                                   " left the lower/upper envelope");
        }
        if (quiet >= opt.increment_repeats && res < opt.residual_tol) {
            rep.converged = true;
            return {detail::to_grid(w), std::move(rep)};
        }
    }
    throw ConvergenceError("monotone_iterate: no convergence in " + std::to_string(opt.max_iters) +
                           " iterations (residual " + std::to_string(rep.final_residual()) + ")");
}

/// Conformal factor c = w^{1/(n-2)} with derivatives from the samples.
inline ConformalFactor conformal_factor_from_w(const GridFunction& w, int n_dim) {
    const double e = 1.0 / (n_dim - 2.0);
    return ConformalFactor(Profile::from_samples(w.map([e](double y) { return std::pow(y, e); })));
}

struct ConformalSolve {
    ConformalFactor c;
    GridFunction w;
    LowerUpper bounds;
    IterationReport report;
    /// sup |V_{g,c,lambda} - V|, filled by solve_conformal_for_potential.
    double round_trip_error = 0.0;
};

inline ConformalSolve solve_yamabe(const YamabeProblem& pb, const IterationOptions& opt = {}) {
    auto bounds = lower_upper_solutions(pb);
    auto sol = monotone_iterate(pb, bounds.lower, bounds.upper, opt);
    auto c = conformal_factor_from_w(sol.w, pb.n_dim());
    return {std::move(c), std::move(sol.w), std::move(bounds), std::move(sol.report), 0.0};
}

/// Gauge factor: Delta_g c^{n-2} + lambda (c^{n-2} - c^{n+2}) = 0, c^{n-2} = eta at the ends.
inline ConformalSolve solve_gauge_problem(const WarpingProfile& f, double lambda, double eta0, double eta1,
                                          const IterationOptions& opt = {}) {
    const std::size_t n = f.size();
    if (f.n_dim() == 2) {
        if (lambda != 0.0) {
            throw InvalidInput("gauge equation in dimension 2 with lambda != 0 forces c = 1; rejected");
        }
        if (eta0 != 1.0 || eta1 != 1.0) {
            throw InvalidInput("gauge equation in dimension 2: w = c^0 = 1 cannot meet eta != 1");
        }
        const auto one = GridFunction::constant(n, 1.0);
        IterationReport rep;
        rep.iterates = {one};
        rep.residuals = {0.0};
        rep.converged = true;
        return {ConformalFactor::identity(n), one, {one, one, "dimension-2"}, std::move(rep), 0.0};
    }
    const YamabeProblem pb(f, lambda, GridFunction::constant(n, 0.0), eta0, eta1);
    auto out = solve_yamabe(pb, opt);
    if ((eta0 != 1.0 || eta1 != 1.0) && sup_distance(out.c.c(), GridFunction::constant(n, 1.0)) <= 1e-6) {
        throw ConvergenceError("solve_gauge_factor: boundary data differ from 1 but c is numerically 1");
    }
    out.round_trip_error = potential_of_conformal_factor(f, out.c, lambda).sup_norm();
    return out;
}

inline ConformalFactor solve_gauge_factor(const WarpingProfile& f, double lambda, double eta0, double eta1) {
    return solve_gauge_problem(f, lambda, eta0, eta1).c;
}

inline constexpr double kRoundTripTolerance = 1e-7;

/// c with V_{g,c,lambda} = V; the round trip is checked before returning.
inline ConformalSolve solve_conformal_for_potential_full(const WarpingProfile& f, double lambda, const GridFunction& v,
                                                         double eta0, double eta1, const IterationOptions& opt = {}) {
    const YamabeProblem pb(f, lambda, v, eta0, eta1);
    auto out = solve_yamabe(pb, opt);
    out.round_trip_error = sup_distance(potential_of_conformal_factor(f, out.c, lambda), v);
    if (!(out.round_trip_error <= kRoundTripTolerance)) {
        throw ConvergenceError("solve_conformal_for_potential: round trip misses V by " +
                               std::to_string(out.round_trip_error));
    }
    return out;
}

inline ConformalFactor solve_conformal_for_potential(const WarpingProfile& f, double lambda, const GridFunction& v,
                                                     double eta0, double eta1) {
    return solve_conformal_for_potential_full(f, lambda, v, eta0, eta1).c;
}

}  // namespace calderon
