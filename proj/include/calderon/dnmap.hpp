#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "calderon/error.hpp"
#include "calderon/geometry.hpp"
#include "calderon/grid_function.hpp"
#include "calderon/numerics.hpp"
#include "calderon/sturm.hpp"

namespace calderon {

/// Per-harmonic DN block. a01 maps data on x=1 to the flux on x=0, a10 the reverse.
struct DnBlock {
    double mu = 0.0;
    double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;
    double delta = 0.0;
    double m = 0.0;
    double n_fn = 0.0;
    /// |Delta(s0) - Delta(s1)| / |Delta|: the two off-diagonal entries use the two values.
    double cross_consistency = 0.0;
};

/// (f, V, lambda) with Q = q_f + (V - lambda) f^4 precomputed for repeated block evaluation.
class DnModel {
public:
    DnModel(WarpingProfile f, GridFunction v, double lambda)
        : f_(std::move(f)), v_(std::move(v)), lambda_(lambda), q_grid_(effective_potential(f_, v_, lambda_)),
          q_(q_grid_) {}

    const WarpingProfile& f() const noexcept { return f_; }
    const GridFunction& v() const noexcept { return v_; }
    double lambda() const noexcept { return lambda_; }
    const CubicInterpolant& q() const noexcept { return q_; }
    const GridFunction& q_grid() const noexcept { return q_grid_; }

    DnBlock block(double mu) const {
        const auto fs = fundamental_system(q_, mu);
        const ScaledReal delta = fs.delta();
        const ScaledReal delta_r = fs.delta_at_left();
        detail::check_pole(delta, fs.w_c0_s1(), mu);
        const int n = f_.n_dim();
        const double f0 = f_.f().front(), f1 = f_.f().back();
        const double df0 = f_.df().front(), df1 = f_.df().back();

        DnBlock b;
        b.mu = mu;
        b.delta = delta.value();
        b.m = -detail::scaled_ratio(fs.w_c0_s1(), delta);
        b.n_fn = -detail::scaled_ratio(fs.w_c1_s0(), delta);
        // 1/Delta as exp(-log|Delta|) keeps large-mu entries finite
        const double inv = delta.sign() * std::exp(-delta.log_abs());
        const double inv_r = delta_r.sign() * std::exp(-delta_r.log_abs());
        b.a00 = (n - 2) * df0 / (f0 * f0 * f0) - b.m / (f0 * f0);
        b.a01 = -std::pow(f1, n - 2) / std::pow(f0, n) * inv;
        b.a10 = -std::pow(f0, n - 2) / std::pow(f1, n) * inv_r;
        b.a11 = -(n - 2) * df1 / (f1 * f1 * f1) - b.n_fn / (f1 * f1);
        b.cross_consistency = std::abs(detail::scaled_ratio(delta_r, delta) - 1.0);
        return b;
    }

    std::vector<DnBlock> blocks(const std::vector<double>& mus, std::size_t jobs = 1) const {
        std::vector<DnBlock> out(mus.size());
        parallel_for(mus.size(), jobs, [&](std::size_t k) { out[k] = block(mus[k]); });
        return out;
    }

private:
    WarpingProfile f_;
    GridFunction v_;
    double lambda_;
    GridFunction q_grid_;
    CubicInterpolant q_;
};

inline DnBlock dn_block(const WarpingProfile& f, const GridFunction& v, double lambda, double mu) {
    return DnModel(f, v, lambda).block(mu);
}

enum class Direction { zero_to_one, one_to_zero };

/// Disjoint-data DN coefficients per harmonic: a10 (data on x=0, flux on x=1)
/// or a01 (data on x=1, flux on x=0).
inline std::vector<double> disjoint_coefficients(const DnModel& model, const TransverseSpectrum& spectrum,
                                                 Direction dir, std::size_t count = 0, std::size_t jobs = 1) {
    const auto mus = spectrum.mus(count);
    std::vector<double> out(mus.size());
    parallel_for(mus.size(), jobs, [&](std::size_t k) {
        try {
            const auto b = model.block(mus[k]);
            out[k] = dir == Direction::zero_to_one ? b.a10 : b.a01;
        } catch (const PoleError& e) {
            throw PoleError("harmonic " + std::to_string(k) + ": " + e.what(), mus[k]);
        }
    });
    return out;
}

inline std::vector<double> disjoint_coefficients(const WarpingProfile& f, const GridFunction& v, double lambda,
                                                 const TransverseSpectrum& spectrum, Direction dir,
                                                 std::size_t count = 0, std::size_t jobs = 1) {
    return disjoint_coefficients(DnModel(f, v, lambda), spectrum, dir, count, jobs);
}

struct DnComparisonRow {
    double mu = 0.0;
    DnBlock a, b;
};

struct DnComparison {
    /// max_k |a01^A - a01^B| / |a01^A|, taken over both off-diagonal entries.
    double off_diagonal_sup_rel = 0.0;
    /// max_k |a00^A - a00^B|.
    double diagonal_sup_abs = 0.0;
    /// max_k |a11^A - a11^B|.
    double far_diagonal_sup_abs = 0.0;
    /// max_k - min_k of a00^A - a00^B.
    double diagonal_difference_spread = 0.0;
    std::vector<DnComparisonRow> rows;
};

inline DnComparison compare_models(const DnModel& a, const DnModel& b, const TransverseSpectrum& spectrum,
                                   std::size_t n_harmonics, std::size_t jobs = 1) {
    if (a.lambda() != b.lambda()) throw InvalidInput("compare_models: models must share lambda");
    const auto mus = spectrum.mus(n_harmonics);
    const auto ba = a.blocks(mus, jobs);
    const auto bb = b.blocks(mus, jobs);
    DnComparison out;
    double lo = 0, hi = 0;
    for (std::size_t k = 0; k < mus.size(); ++k) {
        const auto& x = ba[k];
        const auto& y = bb[k];
        out.off_diagonal_sup_rel = std::max({out.off_diagonal_sup_rel, std::abs(x.a01 - y.a01) / std::abs(x.a01),
                                             std::abs(x.a10 - y.a10) / std::abs(x.a10)});
        out.diagonal_sup_abs = std::max(out.diagonal_sup_abs, std::abs(x.a00 - y.a00));
        out.far_diagonal_sup_abs = std::max(out.far_diagonal_sup_abs, std::abs(x.a11 - y.a11));
        const double d = x.a00 - y.a00;
        lo = k == 0 ? d : std::min(lo, d);
        hi = k == 0 ? d : std::max(hi, d);
        out.rows.push_back({mus[k], x, y});
    }
    out.diagonal_difference_spread = hi - lo;
    return out;
}

enum class Component { gamma0, gamma1 };

/// Open rectangle (t1a, t1b) x (t2a, t2b) of angles on one boundary torus.
struct BoundaryPatch {
    Component component = Component::gamma0;
    double t1a = 0, t1b = 0, t2a = 0, t2b = 0;

    void validate() const {
        constexpr double two_pi = 2 * std::numbers::pi;
        auto ok = [&](double a, double b) { return 0.0 <= a && a < b && b <= two_pi; };
        if (!ok(t1a, t1b) || !ok(t2a, t2b)) {
            throw InvalidInput("BoundaryPatch: need 0 <= a < b <= 2 pi on both axes");
        }
    }
    bool intersects(const BoundaryPatch& o) const {
        return component == o.component && t1a < o.t1b && o.t1a < t1b && t2a < o.t2b && o.t2a < t2b;
    }
};

struct GaugeSynthesis {
    double kappa = 0.0;
    /// sup of the difference field on the Neumann-patch grid.
    double sup_on_neumann = 0.0;
    /// sup of the difference field on the Dirichlet patch (control, ~|kappa|).
    double sup_on_dirichlet = 0.0;
    /// sup over the whole x=0 torus of |difference - kappa psi|.
    double identity_error = 0.0;
    /// sup over the torus of |psi_truncated - psi|.
    double truncation_tail = 0.0;
    /// max - min of the per-harmonic diagonal difference.
    double multiplier_spread = 0.0;
    std::size_t distinct_mus = 0;
    std::vector<std::vector<double>> neumann_field;
};

namespace detail {

/// (1 - s^2)^3 on |s| < 1.
inline double bump(double s) {
    const double u = 1 - s * s;
    return std::abs(s) < 1 ? u * u * u : 0.0;
}

/// Real cosine coefficients beta(j) of the bump on (a, b): its Fourier
/// coefficient is beta(j) e^{-i j m}, m the midpoint.
inline std::vector<double> bump_coefficients(double a, double b, std::size_t n_modes) {
    const double r = (b - a) / 2;
    constexpr std::size_t kQuad = 8193;
    std::vector<double> out(n_modes + 1);
    std::vector<double> g(kQuad);
    for (std::size_t j = 0; j <= n_modes; ++j) {
        for (std::size_t i = 0; i < kQuad; ++i) {
            const double s = static_cast<double>(i) / (kQuad - 1);
            g[i] = bump(s) * std::cos(static_cast<double>(j) * r * s);
        }
        out[j] = r / std::numbers::pi * integrate_grid(GridFunction(g));
    }
    return out;
}

/// sum_{j,l=0..N} K[j][l] cos(j (t1 - m1)) cos(l (t2 - m2)) on a tensor grid.
inline std::vector<std::vector<double>> cosine_sum(const std::vector<std::vector<double>>& k, double m1, double m2,
                                                   const std::vector<double>& t1, const std::vector<double>& t2) {
    const std::size_t nm = k.size();
    std::vector<std::vector<double>> c2(nm, std::vector<double>(t2.size()));
    for (std::size_t l = 0; l < nm; ++l) {
        for (std::size_t q = 0; q < t2.size(); ++q) c2[l][q] = std::cos(static_cast<double>(l) * (t2[q] - m2));
    }
    std::vector<std::vector<double>> out(t1.size(), std::vector<double>(t2.size(), 0.0));
    std::vector<double> row(t2.size());
    for (std::size_t j = 0; j < nm; ++j) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t l = 0; l < nm; ++l) {
            if (k[j][l] == 0.0) continue;
            for (std::size_t q = 0; q < t2.size(); ++q) row[q] += k[j][l] * c2[l][q];
        }
        for (std::size_t p = 0; p < t1.size(); ++p) {
            const double cj = std::cos(static_cast<double>(j) * (t1[p] - m1));
            for (std::size_t q = 0; q < t2.size(); ++q) out[p][q] += cj * row[q];
        }
    }
    return out;
}

inline std::vector<double> midpoints(double a, double b, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = a + (static_cast<double>(i) + 0.5) * (b - a) / n;
    return t;
}

}  // namespace detail

inline constexpr std::size_t kNeumannGrid = 64;
inline constexpr std::size_t kTorusGrid = 128;

/// Applies the x=0 diagonal DN multipliers of g and of c^4 g to a bump supported
/// in gamma_d and measures the difference field. With c(0)=1 the difference is
/// kappa psi, kappa = -(n-2) c'(0)/f^2(0), so it vanishes off the support of psi.
inline GaugeSynthesis synthesize_gauge_check(const WarpingProfile& f, double lambda, const ConformalFactor& c,
                                             const BoundaryPatch& gamma_d, const BoundaryPatch& gamma_n,
                                             std::size_t n_modes, std::size_t jobs = 1) {
    gamma_d.validate();
    gamma_n.validate();
    if (gamma_d.component != Component::gamma0 || gamma_n.component != Component::gamma0) {
        throw InvalidInput("synthesize_gauge_check: both patches must lie on the x=0 boundary");
    }
    if (gamma_d.intersects(gamma_n)) throw InvalidInput("synthesize_gauge_check: patches intersect");
    if (std::abs(c.c().front() - 1.0) > 1e-12) {
        throw InvalidInput("synthesize_gauge_check: c(0) must be 1, got " + std::to_string(c.c().front()));
    }
    if (n_modes == 0) throw InvalidInput("synthesize_gauge_check: n_modes must be positive");

    const std::size_t nm = n_modes + 1;
    std::vector<double> mus;
    for (std::size_t j = 0; j < nm; ++j) {
        for (std::size_t l = 0; l < nm; ++l) mus.push_back(static_cast<double>(j * j + l * l));
    }
    std::sort(mus.begin(), mus.end());
    mus.erase(std::unique(mus.begin(), mus.end()), mus.end());

    const DnModel plain(f, GridFunction::constant(f.size(), 0.0), lambda);
    const DnModel rescaled(conformal_rescale(f, c), GridFunction::constant(f.size(), 0.0), lambda);
    std::vector<double> diff(mus.size());
    parallel_for(mus.size(), jobs, [&](std::size_t k) {
        const auto a = plain.block(mus[k]);
        const auto b = rescaled.block(mus[k]);
        for (const auto* blk : {&a, &b}) {
            if (std::abs(blk->delta) < 1e-8) {
                throw AdmissibilityError("synthesize_gauge_check: |Delta(" + std::to_string(mus[k]) + ")| < 1e-8",
                                         mus[k]);
            }
        }
        diff[k] = a.a00 - b.a00;
    });
    auto multiplier = [&](std::size_t j, std::size_t l) {
        const double mu = static_cast<double>(j * j + l * l);
        return diff[static_cast<std::size_t>(std::lower_bound(mus.begin(), mus.end(), mu) - mus.begin())];
    };

    const auto beta1 = detail::bump_coefficients(gamma_d.t1a, gamma_d.t1b, n_modes);
    const auto beta2 = detail::bump_coefficients(gamma_d.t2a, gamma_d.t2b, n_modes);
    const double m1 = (gamma_d.t1a + gamma_d.t1b) / 2, m2 = (gamma_d.t2a + gamma_d.t2b) / 2;
    const double r1 = (gamma_d.t1b - gamma_d.t1a) / 2, r2 = (gamma_d.t2b - gamma_d.t2a) / 2;
    std::vector<std::vector<double>> k_diff(nm, std::vector<double>(nm)), k_psi = k_diff;
    for (std::size_t j = 0; j < nm; ++j) {
        for (std::size_t l = 0; l < nm; ++l) {
            const double w = (j == 0 ? 1.0 : 2.0) * (l == 0 ? 1.0 : 2.0) * beta1[j] * beta2[l];
            k_psi[j][l] = w;
            k_diff[j][l] = w * multiplier(j, l);
        }
    }

    GaugeSynthesis out;
    out.kappa = -(f.n_dim() - 2) * c.dc().front() / (f.f().front() * f.f().front());
    out.distinct_mus = mus.size();
    const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
    out.multiplier_spread = *hi - *lo;

    auto sup = [](const std::vector<std::vector<double>>& m) {
        double s = 0;
        for (const auto& row : m) {
            for (double v : row) s = std::max(s, std::abs(v));
        }
        return s;
    };
    const auto n1 = detail::midpoints(gamma_n.t1a, gamma_n.t1b, kNeumannGrid);
    const auto n2 = detail::midpoints(gamma_n.t2a, gamma_n.t2b, kNeumannGrid);
    out.neumann_field = detail::cosine_sum(k_diff, m1, m2, n1, n2);
    out.sup_on_neumann = sup(out.neumann_field);
    out.sup_on_dirichlet = sup(detail::cosine_sum(k_diff, m1, m2, detail::midpoints(gamma_d.t1a, gamma_d.t1b, kNeumannGrid),
                                                  detail::midpoints(gamma_d.t2a, gamma_d.t2b, kNeumannGrid)));

    constexpr double two_pi = 2 * std::numbers::pi;
    const auto tt = detail::midpoints(0.0, two_pi, kTorusGrid);
    const auto field = detail::cosine_sum(k_diff, m1, m2, tt, tt);
    const auto psi_trunc = detail::cosine_sum(k_psi, m1, m2, tt, tt);
    // periodic distance to the patch centre, in patch half-widths
    auto local = [](double t, double m, double r) {
        double d = std::remainder(t - m, two_pi);
        return d / r;
    };
    for (std::size_t p = 0; p < kTorusGrid; ++p) {
        for (std::size_t q = 0; q < kTorusGrid; ++q) {
            const double psi = detail::bump(local(tt[p], m1, r1)) * detail::bump(local(tt[q], m2, r2));
            out.identity_error = std::max(out.identity_error, std::abs(field[p][q] - out.kappa * psi));
            out.truncation_tail = std::max(out.truncation_tail, std::abs(psi_trunc[p][q] - psi));
        }
    }
    return out;
}

namespace detail {

inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

}  // namespace detail

inline void write_dn_table_csv(std::ostream& os, const std::vector<DnBlock>& blocks) {
    os << "mu,delta,M,N,a00,a01,a10,a11\n";
    for (const auto& b : blocks) {
        os << detail::fmt12(b.mu) << ',' << detail::fmt12(b.delta) << ',' << detail::fmt12(b.m) << ','
           << detail::fmt12(b.n_fn) << ',' << detail::fmt12(b.a00) << ',' << detail::fmt12(b.a01) << ','
           << detail::fmt12(b.a10) << ',' << detail::fmt12(b.a11) << '\n';
    }
}

inline void write_matrix_csv(std::ostream& os, const std::vector<std::vector<double>>& m) {
    for (const auto& row : m) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << detail::fmt12(row[j]);
        os << '\n';
    }
}

}  // namespace calderon
