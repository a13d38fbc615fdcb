#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "calderon/numerics.hpp"

using namespace calderon;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kN = 2049;

GridFunction zero() { return GridFunction::constant(kN, 0.0); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(GridFunction, RejectsSmallAndNonFinite) {
    EXPECT_THROW(GridFunction(std::vector<double>(32, 0.0)), InvalidInput);
    std::vector<double> v(33, 0.0);
    v[7] = std::nan("");
    EXPECT_THROW(GridFunction(std::move(v)), InvalidInput);
    EXPECT_NO_THROW(GridFunction::constant(33, 1.0));
}

TEST(GridFunction, FourthOrderDerivatives) {
    const auto g = GridFunction::sample(257, [](double x) { return std::sin(3 * x) + x * x; });
    const auto d1 = differentiate(g);
    const auto d2 = differentiate2(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        EXPECT_NEAR(d1[i], 3 * std::cos(3 * x) + 2 * x, 1e-7);
        EXPECT_NEAR(d2[i], -9 * std::sin(3 * x) + 2, 1e-5);
    }
}

TEST(GridFunction, TailIntegral) {
    const auto g = GridFunction::sample(kN, [](double x) { return 2 * std::sin(kPi * x) * std::sin(kPi * x); });
    const auto tail = tail_integral(g);
    for (std::size_t i = 0; i < g.size(); i += 64) {
        const double x = g.x(i);
        EXPECT_NEAR(tail[i], 1 - x + std::sin(2 * kPi * x) / (2 * kPi), 1e-12);
    }
}

TEST(Integrate, LinearSolution) {
    const auto r = integrate_schrodinger(zero(), 0.0, 0.0, 1.0, Endpoint::left);
    EXPECT_NEAR(r.end.true_value(), 1.0, 1e-12);
    EXPECT_NEAR(r.end.true_derivative(), 1.0, 1e-12);
}

TEST(Integrate, HyperbolicClosedForm) {
    const auto r = integrate_schrodinger(zero(), kPi * kPi, 0.0, 1.0, Endpoint::left);
    EXPECT_LT(rel(r.end.true_value(), std::sinh(kPi) / kPi), 1e-9);
    EXPECT_LT(rel(r.end.true_derivative(), std::cosh(kPi)), 1e-9);
}

TEST(Integrate, FirstDirichletMode) {
    const auto r = integrate_schrodinger(zero(), -kPi * kPi, 0.0, 1.0, Endpoint::left);
    EXPECT_NEAR(r.end.true_value(), 0.0, 1e-10);
    EXPECT_NEAR(r.end.true_derivative(), -1.0, 1e-9);
}

TEST(Integrate, LargeMuStaysRepresentable) {
    const double mu = 1e8;
    const auto r = integrate_schrodinger(zero(), mu, 0.0, 1.0, Endpoint::left);
    const double k = std::sqrt(mu);
    // log(sinh(k)/k) = k - log 2 - log k for large k
    EXPECT_NEAR(std::log(r.end.value) + r.end.log_scale, k - std::log(2.0) - std::log(k), 1e-6);
    EXPECT_LE(std::max(std::abs(r.end.value), std::abs(r.end.derivative)), 1e4);
}

TEST(Integrate, RejectsZeroInitialData) {
    EXPECT_THROW(integrate_schrodinger(zero(), 1.0, 0.0, 0.0, Endpoint::left), InvalidInput);
}

TEST(Integrate, ScalingInvariance) {
    const auto q = GridFunction::sample(kN, [](double x) { return 3 * std::cos(5 * x); });
    for (double mu : {-50.0, 0.0, 40.0}) {
        const auto a = integrate_schrodinger(q, mu, 0.3, 1.0, Endpoint::left);
        const auto b = integrate_schrodinger(q, mu, 0.3 * 7.5, 7.5, Endpoint::left);
        EXPECT_LT(rel(b.end.true_value(), 7.5 * a.end.true_value()), 1e-9);
        EXPECT_LT(rel(b.end.true_derivative(), 7.5 * a.end.true_derivative()), 1e-9);
    }
}

TEST(Integrate, WronskianConservation) {
    const auto q = GridFunction::sample(kN, [](double x) { return 2 + std::sin(kPi * x) - 5; });
    for (double mu : {-400.0, -30.0, 0.0, 25.0}) {
        const auto c = integrate_schrodinger(q, mu, 1.0, 0.0, Endpoint::left, true);
        const auto s = integrate_schrodinger(q, mu, 0.0, 1.0, Endpoint::left, true);
        const auto& tc = *c.trajectory;
        const auto& ts = *s.trajectory;
        const double scale = std::exp(tc.log_scale + ts.log_scale);
        for (std::size_t i = 0; i < kN; ++i) {
            const double w = (tc.value[i] * ts.derivative[i] - tc.derivative[i] * ts.value[i]) * scale;
            ASSERT_NEAR(w, 1.0, 1e-9) << "mu=" << mu << " i=" << i;
        }
    }
}

TEST(Integrate, Reversibility) {
    const auto q = GridFunction::sample(kN, [](double x) { return 4 * std::exp(-x) - 1; });
    for (double mu : {-200.0, -100.0, -10.0, 0.0, 10.0, 50.0}) {
        const auto fwd = integrate_schrodinger(q, mu, 0.7, -0.4, Endpoint::left);
        const auto back = integrate_schrodinger(q, mu, fwd.end.true_value(), fwd.end.true_derivative(),
                                                Endpoint::right);
        EXPECT_LT(std::abs(back.end.true_value() - 0.7) / 0.7, 1e-8) << "mu=" << mu;
        EXPECT_LT(std::abs(back.end.true_derivative() + 0.4) / 0.4, 1e-8) << "mu=" << mu;
    }
}

TEST(Integrate, ZeroCountMatchesDirichletIndex) {
    // between the 3rd and 4th Dirichlet eigenvalues of -v'' the sine has 3 interior zeros
    const auto r = integrate_schrodinger(zero(), -12.5 * kPi * kPi, 0.0, 1.0, Endpoint::left);
    EXPECT_EQ(r.zero_count, 3);
    EXPECT_GT(r.prufer_phase, 3 * kPi);
    EXPECT_LT(r.prufer_phase, 4 * kPi);
}

TEST(BandedBvp, HarmonicInterpolation) {
    const std::vector<double> a(kN, 0.0);
    const auto t = second_difference_operator<double>(a);
    const auto u = solve_banded_bvp(t, GridFunction::constant(kN, 0.0), 1.0, 2.0);
    for (std::size_t i = 0; i < kN; ++i) EXPECT_NEAR(u[i], 1.0 + u.x(i), 1e-10);
    const auto rhs = std::vector<double>(kN, 0.0);
    EXPECT_LE(banded_residual<double>(t, rhs, u.values()), 1e-12);
}

TEST(BandedBvp, HyperbolicMidpoint) {
    const std::vector<double> a(kN, kPi * kPi);
    const auto t = numerov_operator<double>(a);
    const std::vector<double> rhs(kN, 0.0);
    const auto u = solve_dirichlet<double>(t, rhs, 0.0, 1.0);
    EXPECT_NEAR(u[kN / 2], std::sinh(kPi / 2) / std::sinh(kPi), 1e-10);
    EXPECT_NEAR(u[kN / 2], 0.199268, 1e-6);
    EXPECT_LE(banded_residual<double>(t, rhs, u), 1e-12);
}

TEST(BandedBvp, EigenIdentity) {
    const std::vector<double> a(kN, 0.0);
    const auto g = GridFunction::sample(kN, [](double x) { return kPi * kPi * std::sin(kPi * x); });
    const auto t = numerov_operator<double>(a);
    const auto rhs = numerov_rhs<double>(g.values());
    const auto u = solve_dirichlet<double>(t, rhs, 0.0, 0.0);
    for (std::size_t i = 0; i < kN; ++i) EXPECT_NEAR(u[i], std::sin(kPi * g.x(i)), 1e-12);
    EXPECT_LE(banded_residual<double>(t, rhs, u), 1e-12);
}

TEST(BandedBvp, SingularSystemDetected) {
    Tridiagonal<double> t{std::vector<double>(40, 1.0), std::vector<double>(40, 0.0),
                          std::vector<double>(40, 1.0)};
    EXPECT_THROW(solve_dirichlet<double>(t, std::vector<double>(40, 1.0), 0.0, 0.0), SingularSystem);
}

TEST(BandedBvp, AgreesWithShooting) {
    // -u'' + a u = 0, u(0)=1, u(1)=3, with a = 10 + 5 x^2
    const auto a = GridFunction::sample(kN, [](double x) { return 10 + 5 * x * x; });
    const auto t = numerov_operator<double>(a.values());
    const auto u = solve_dirichlet<double>(t, std::vector<double>(kN, 0.0), 1.0, 3.0);
    // shooting: u = c + beta s with c(0)=1,c'(0)=0 and s(0)=0,s'(0)=1
    const auto c = integrate_schrodinger(a, 0.0, 1.0, 0.0, Endpoint::left, true);
    const auto s = integrate_schrodinger(a, 0.0, 0.0, 1.0, Endpoint::left, true);
    const double beta = (3.0 - c.end.true_value()) / s.end.true_value();
    const auto& tc = *c.trajectory;
    const auto& ts = *s.trajectory;
    double err = 0;
    for (std::size_t i = 0; i < kN; ++i) {
        const double shoot = tc.value[i] * std::exp(tc.log_scale) + beta * ts.value[i] * std::exp(ts.log_scale);
        err = std::max(err, std::abs(u[i] - shoot));
    }
    EXPECT_LE(err, 1e-8);
}

TEST(FindRoot, Linear) { EXPECT_NEAR(find_root([](double x) { return x - 0.5; }, 0.0, 1.0), 0.5, 1e-12); }

TEST(FindRoot, ContinuedSinhOverSqrt) {
    auto fn = [](double mu) {
        if (mu < 0) return std::sin(std::sqrt(-mu)) / std::sqrt(-mu);
        return mu == 0 ? 1.0 : std::sinh(std::sqrt(mu)) / std::sqrt(mu);
    };
    EXPECT_NEAR(find_root(fn, -12.0, -8.0), -kPi * kPi, 1e-11);
}

TEST(FindRoot, RootAtEdge) {
    EXPECT_EQ(find_root([](double x) { return x - 1.0; }, 0.0, 1.0), 1.0);
    EXPECT_NEAR(find_root([](double x) { return x - 1e-13; }, 0.0, 1.0, 1e-12), 0.0, 1e-12);
}

TEST(FindRoot, NoSignChange) {
    EXPECT_THROW(find_root([](double x) { return x * x + 1; }, -1.0, 1.0), BracketError);
}

TEST(Quadrature, Basics) {
    EXPECT_NEAR(integrate_grid(GridFunction::constant(kN, 1.0)), 1.0, 1e-14);
    EXPECT_NEAR(integrate_grid(GridFunction::sample(kN, [](double x) { return 2 * std::pow(std::sin(kPi * x), 2); })),
                1.0, 1e-13);
    EXPECT_NEAR(integrate_grid(GridFunction::sample(kN, [](double x) { return x * x * x; })), 0.25, 1e-14);
    EXPECT_NEAR(integrate_grid(GridFunction::sample(2048, [](double x) { return x; })), 0.5, 1e-14);
}

TEST(ParallelFor, IndexOrderedAndRethrows) {
    std::vector<int> out(100, 0);
    parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 5) throw InvalidInput("x"); }), InvalidInput);
}
