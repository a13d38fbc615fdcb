#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calderon/error.hpp"
#include "calderon/grid_function.hpp"
#include "calderon/numerics.hpp"

namespace calderon {

/// Solutions of v'' = (Q + mu) v with unit Cauchy data at one endpoint,
/// each stored at the opposite endpoint:
///   c0(0)=1, c0'(0)=0;  s0(0)=0, s0'(0)=1   (launched at x=0, stored at x=1)
///   c1(1)=1, c1'(1)=0;  s1(1)=0, s1'(1)=1   (launched at x=1, stored at x=0)
struct FundamentalSystem {
    double mu = 0.0;
    ScaledSolution c0, s0, c1, s1;
    std::optional<Trajectory> c0_path, s0_path, c1_path, s1_path;

    /// W(s0, s1) evaluated at x=1, where s1 = 0 and s1' = 1: equals s0(1).
    ScaledReal delta() const { return s0.scaled_value(); }
    /// W(s0, s1) evaluated at x=0, where s0 = 0 and s0' = 1: equals -s1(0).
    ScaledReal delta_at_left() const { return {-s1.value, s1.log_scale}; }
    /// W(c0, s1) at x=1.
    ScaledReal w_c0_s1() const { return c0.scaled_value(); }
    /// W(c0, s1) at x=0 (cross-check of w_c0_s1).
    ScaledReal w_c0_s1_at_left() const { return s1.scaled_derivative(); }
    /// W(c1, s0) at x=0.
    ScaledReal w_c1_s0() const { return c1.scaled_value(); }
};

inline FundamentalSystem fundamental_system(const CubicInterpolant& q, double mu,
                                            bool record_trajectories = false) {
    FundamentalSystem fs;
    fs.mu = mu;
    auto run = [&](double v, double dv, Endpoint e, ScaledSolution& out, std::optional<Trajectory>& path) {
        auto r = integrate_schrodinger(q, mu, v, dv, e, record_trajectories);
        out = r.end;
        path = std::move(r.trajectory);
    };
    run(1.0, 0.0, Endpoint::left, fs.c0, fs.c0_path);
    run(0.0, 1.0, Endpoint::left, fs.s0, fs.s0_path);
    run(1.0, 0.0, Endpoint::right, fs.c1, fs.c1_path);
    run(0.0, 1.0, Endpoint::right, fs.s1, fs.s1_path);
    return fs;
}

inline FundamentalSystem fundamental_system(const GridFunction& q, double mu,
                                            bool record_trajectories = false) {
    return fundamental_system(CubicInterpolant(q), mu, record_trajectories);
}

/// Characteristic function: the Wronskian W(s0, s1) = s0(1), with its scale.
inline ScaledReal characteristic(const CubicInterpolant& q, double mu) {
    return integrate_schrodinger(q, mu, 0.0, 1.0, Endpoint::left).end.scaled_value();
}

inline ScaledReal characteristic(const GridFunction& q, double mu) {
    return characteristic(CubicInterpolant(q), mu);
}

/// Delta, M and N at one mu.
struct SpectralData {
    double mu = 0.0;
    ScaledReal delta;
    double m = 0.0;
    double n_fn = 0.0;

    double delta_value() const { return delta.value(); }
};

namespace detail {

/// a/b for scaled reals; the log scales combine exactly.
inline double scaled_ratio(const ScaledReal& a, const ScaledReal& b) {
    return a.mantissa / b.mantissa * std::exp(a.log_scale - b.log_scale);
}

/// Raises PoleError when |Delta| < 1e-10 * max(|W(c0,s1)|, 1).
inline void check_pole(const ScaledReal& delta, const ScaledReal& w, double mu) {
    // compare in log space so huge scales cannot overflow
    const double log_d = delta.mantissa == 0.0 ? -std::numeric_limits<double>::infinity() : delta.log_abs();
    const double log_w = w.mantissa == 0.0 ? -std::numeric_limits<double>::infinity() : w.log_abs();
    if (log_d < std::log(1e-10) + std::max(log_w, 0.0)) {
        throw PoleError("mu=" + std::to_string(mu) + " is numerically a zero of the characteristic function",
                        mu);
    }
}

}  // namespace detail

/// Delta, M = -W(c0,s1)/Delta and N = -W(c1,s0)/Delta from three integrations.
inline SpectralData spectral_data(const CubicInterpolant& q, double mu) {
    const auto c0 = integrate_schrodinger(q, mu, 1.0, 0.0, Endpoint::left).end;
    const auto s0 = integrate_schrodinger(q, mu, 0.0, 1.0, Endpoint::left).end;
    const auto c1 = integrate_schrodinger(q, mu, 1.0, 0.0, Endpoint::right).end;
    SpectralData d;
    d.mu = mu;
    d.delta = s0.scaled_value();
    detail::check_pole(d.delta, c0.scaled_value(), mu);
    d.m = -detail::scaled_ratio(c0.scaled_value(), d.delta);
    d.n_fn = -detail::scaled_ratio(c1.scaled_value(), d.delta);
    return d;
}

inline SpectralData spectral_data(const GridFunction& q, double mu) {
    return spectral_data(CubicInterpolant(q), mu);
}

struct WeylPair {
    double m = 0.0;
    double n_fn = 0.0;
};

inline WeylPair weyl_functions(const GridFunction& q, double mu) {
    const auto d = spectral_data(q, mu);
    return {d.m, d.n_fn};
}

/// First `count` zeros alpha_1 > alpha_2 > ... of Delta with L2-normalized
/// eigenfunctions (phi'(0) > 0) and their derivatives, both on the Q grid.
struct DirichletSpectrum {
    std::vector<double> alphas;
    std::vector<GridFunction> eigenfunctions;
    std::vector<GridFunction> derivatives;

    std::size_t size() const noexcept { return alphas.size(); }
};

namespace detail {

/// Number of zeros alpha_k of Delta with alpha_k > mu (interior zeros of s0).
class ZeroCounter {
public:
    explicit ZeroCounter(const CubicInterpolant& q) : q_(q) {}

    int operator()(double mu) {
        if (auto it = cache_.find(mu); it != cache_.end()) return it->second;
        const int c = integrate_schrodinger(q_, mu, 0.0, 1.0, Endpoint::left).zero_count;
        cache_.emplace(mu, c);
        return c;
    }

private:
    const CubicInterpolant& q_;
    std::map<double, int> cache_;
};

struct Bracket {
    int index;  // 1-based eigenvalue index
    double lo, hi;
};

inline void isolate(ZeroCounter& count, double lo, int c_lo, double hi, int c_hi, int wanted,
                    std::vector<Bracket>& out) {
    // alphas in (lo, hi) have indices c_hi+1 .. c_lo
    if (c_lo == c_hi || c_hi >= wanted) return;
    if (c_lo - c_hi == 1) {
        out.push_back({c_lo, lo, hi});
        return;
    }
    if (hi - lo < 1e-9 * std::max(1.0, std::abs(lo))) {
        throw BracketError("eigenvalues " + std::to_string(c_hi + 1) + ".." + std::to_string(c_lo) +
                           " could not be separated near mu=" + std::to_string(lo));
    }
    const double mid = 0.5 * (lo + hi);
    const int c_mid = count(mid);
    isolate(count, mid, c_mid, hi, c_hi, wanted, out);
    isolate(count, lo, c_lo, mid, c_mid, wanted, out);
}

}  // namespace detail

inline DirichletSpectrum dirichlet_spectrum(const GridFunction& q, std::size_t count,
                                            std::size_t jobs = 1) {
    if (count == 0 || count > 200) throw InvalidInput("dirichlet_spectrum: count must be in [1, 200]");
    const CubicInterpolant interp(q);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double c2 = static_cast<double>(count + 2);
    const double lo = -c2 * c2 * pi2 - q.max() - 10.0;
    const double hi = -pi2 + q.sup_norm() + 10.0;

    detail::ZeroCounter counter(interp);
    const int c_hi = counter(hi);
    const int c_lo = counter(lo);
    if (c_hi != 0 || c_lo < static_cast<int>(count)) {
        throw BracketError("dirichlet_spectrum: search window [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "] holds zero counts " + std::to_string(c_lo) + ".." +
                           std::to_string(c_hi) + ", need " + std::to_string(count) + "..0");
    }
    std::vector<detail::Bracket> brackets;
    detail::isolate(counter, lo, c_lo, hi, c_hi, static_cast<int>(count), brackets);
    std::sort(brackets.begin(), brackets.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });

    DirichletSpectrum spec;
    spec.alphas.resize(count);
    spec.eigenfunctions.resize(count);
    spec.derivatives.resize(count);
    parallel_for(count, jobs, [&](std::size_t k) {
        const auto& b = brackets[k];
        auto delta = [&](double mu) { return characteristic(interp, mu).value(); };
        const double tol = 1e-12 * std::max(1.0, std::abs(b.lo));
        const double alpha = find_root(delta, b.lo, b.hi, tol);
        const auto r = integrate_schrodinger(interp, alpha, 0.0, 1.0, Endpoint::left, true);
        const auto& path = *r.trajectory;
        const double norm2 = integrate_grid(path.value.map([](double v) { return v * v; }));
        const double inv = 1.0 / std::sqrt(norm2);
        spec.alphas[k] = alpha;
        spec.eigenfunctions[k] = path.value.map([inv](double v) { return v * inv; });
        spec.derivatives[k] = path.derivative.map([inv](double v) { return v * inv; });
    });
    return spec;
}

/// C * prod_k (1 - mu/alpha_k) over the stored zeros.
inline double hadamard_product(const DirichletSpectrum& spectrum, double c, double mu) {
    if (spectrum.alphas.empty()) throw InvalidInput("hadamard_product: empty spectrum");
    double p = c;
    for (double a : spectrum.alphas) p *= 1.0 - mu / a;
    return p;
}

inline double hadamard_product(std::span<const double> alphas, double c, double mu) {
    double p = c;
    for (double a : alphas) p *= 1.0 - mu / a;
    return p;
}

/// Smallest |Delta(mu)| over the list; throws AdmissibilityError below 1e-8.
inline double require_admissible(const CubicInterpolant& q, std::span<const double> mus,
                                 double threshold = 1e-8) {
    double worst = std::numeric_limits<double>::infinity();
    for (double mu : mus) {
        const double d = std::abs(characteristic(q, mu).value());
        if (d <= threshold) {
            throw AdmissibilityError("lambda lies in a Dirichlet spectrum: |Delta(" + std::to_string(mu) +
                                         ")| = " + std::to_string(d),
                                     mu);
        }
        worst = std::min(worst, d);
    }
    return worst;
}

}  // namespace calderon
