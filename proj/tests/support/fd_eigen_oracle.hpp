#pragma once

// Dense-grid finite-difference oracle for Dirichlet eigenvalues of -v'' + Q v.
// Independent of the shooting code: symmetric tridiagonal matrix, Sturm-sequence
// bisection, then Richardson extrapolation over two grids.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

/// Number of eigenvalues of the tridiagonal (diag d, constant off-diagonal e) below x.
inline int sturm_count(const std::vector<double>& d, double e, double x) {
    int neg = 0;
    double p = 1.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        p = (d[i] - x) - (i == 0 ? 0.0 : e * e / p);
        if (p == 0.0) p = -1e-300;
        if (p < 0) ++neg;
    }
    return neg;
}

/// First `count` eigenvalues E_1 < E_2 < ... of the three-point discretization on n nodes.
inline std::vector<double> fd_eigenvalues(const std::function<double(double)>& q, std::size_t n,
                                          std::size_t count) {
    const double h = 1.0 / static_cast<double>(n - 1);
    const double ih2 = 1.0 / (h * h);
    std::vector<double> d(n - 2);
    double qmax = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i - 1] = 2 * ih2 + q(static_cast<double>(i) * h);
        qmax = std::max(qmax, std::abs(q(static_cast<double>(i) * h)));
    }
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        double lo = -qmax - 1.0, hi = 4 * ih2 + qmax + 1.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (sturm_count(d, -ih2, mid) > static_cast<int>(k)) hi = mid;
            else lo = mid;
        }
        out[k] = 0.5 * (lo + hi);
    }
    return out;
}

/// Richardson-extrapolated alpha_k = -E_k from grids with n and 2n-1 nodes.
inline std::vector<double> dirichlet_alphas(const std::function<double(double)>& q, std::size_t n,
                                            std::size_t count) {
    const auto coarse = fd_eigenvalues(q, n, count);
    const auto fine = fd_eigenvalues(q, 2 * n - 1, count);
    std::vector<double> a(count);
    for (std::size_t k = 0; k < count; ++k) a[k] = -(4 * fine[k] - coarse[k]) / 3;
    return a;
}

}  // namespace oracle
