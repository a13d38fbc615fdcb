#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "calderon/error.hpp"
#include "calderon/geometry.hpp"
#include "calderon/grid_function.hpp"
#include "calderon/sturm.hpp"

namespace calderon {

/// theta_{k,t}(x) = 1 + (e^t - 1) int_x^1 phi_k^2 and its first two derivatives,
/// the latter in closed form from phi_k and phi_k'.
struct IsospectralDeformation {
    int k = 1;
    double t = 0.0;
    GridFunction theta;
    GridFunction dtheta;
    GridFunction d2theta;

    /// (log theta)'' = theta''/theta - (theta'/theta)^2
    GridFunction log_theta_second() const {
        std::vector<double> out(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double r = dtheta[i] / theta[i];
            out[i] = d2theta[i] / theta[i] - r * r;
        }
        return GridFunction(std::move(out));
    }
};

inline constexpr double kMaxFlowTime = 5.0;

inline IsospectralDeformation make_theta(const DirichletSpectrum& spectrum, int k, double t) {
    if (k < 1 || static_cast<std::size_t>(k) > spectrum.size()) {
        throw InvalidInput("make_theta: eigenfunction index " + std::to_string(k) + " out of range 1.." +
                           std::to_string(spectrum.size()));
    }
    if (!std::isfinite(t) || std::abs(t) > kMaxFlowTime) {
        throw InvalidInput("make_theta: |t| must be at most " + std::to_string(kMaxFlowTime));
    }
    const auto& phi = spectrum.eigenfunctions[static_cast<std::size_t>(k - 1)];
    const auto& dphi = spectrum.derivatives[static_cast<std::size_t>(k - 1)];
    const double s = std::expm1(t);
    const auto tail = tail_integral(phi.map([](double v) { return v * v; }));

    IsospectralDeformation d;
    d.k = k;
    d.t = t;
    d.theta = tail.map([s](double v) { return 1.0 + s * v; });
    d.dtheta = phi.map([s](double v) { return -s * v * v; });
    d.d2theta = phi.zip(dphi, [s](double v, double dv) { return -2.0 * s * v * dv; });

    for (std::size_t i = 0; i < d.theta.size(); ++i) {
        if (!(d.theta[i] > 0.0)) {
            throw InvalidInput("make_theta: theta is not positive at x=" + std::to_string(d.theta.x(i)));
        }
    }
    if (std::abs(d.theta.front() - std::exp(t)) > 1e-8 * std::exp(t)) {
        throw InvalidInput("make_theta: theta(0) != e^t; eigenfunction " + std::to_string(k) +
                           " is not normalized");
    }
    return d;
}

/// Q_{k,t} = Q - 2 (log theta)''.
inline GridFunction pt_transform(const GridFunction& q, const IsospectralDeformation& d) {
    const auto l2 = d.log_theta_second();
    return q.zip(l2, [](double a, double b) { return a - 2.0 * b; });
}

/// V~ = V - (2/f^4) (log theta)'' with theta built from the Dirichlet
/// spectrum of Q = q_f + (V - lambda) f^4.
inline GridFunction deform_cylinder_potential(const GridFunction& v, const WarpingProfile& f,
                                              const IsospectralDeformation& d) {
    const auto l2 = d.log_theta_second();
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f2 = f.f()[i] * f.f()[i];
        out[i] = v[i] - 2.0 * l2[i] / (f2 * f2);
    }
    return GridFunction(std::move(out));
}

inline GridFunction deform_cylinder_potential(const GridFunction& v, const WarpingProfile& f, double lambda,
                                              int k, double t) {
    if (k < 1) throw InvalidInput("deform_cylinder_potential: k must be >= 1");
    const auto q = effective_potential(f, v, lambda);
    const auto spec = dirichlet_spectrum(q, static_cast<std::size_t>(k));
    return deform_cylinder_potential(v, f, make_theta(spec, k, t));
}

}  // namespace calderon
