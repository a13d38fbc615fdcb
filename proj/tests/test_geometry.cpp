#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "calderon/geometry.hpp"

using namespace calderon;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kN = 2049;

WarpingProfile exp_profile(int n) {
    return WarpingProfile(Profile::from_functions(
                              kN, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); },
                              [](double x) { return std::exp(x); }),
                          n);
}

/// Smooth random function a0 + sum a_j sin(j pi x + p_j) kept in [0.5, 2], with derivatives.
struct RandomSmooth {
    double a0;
    std::array<double, 3> a, p;

    explicit RandomSmooth(std::mt19937_64& rng) {
        std::uniform_real_distribution<double> amp(-0.15, 0.15), ph(0.0, 2 * kPi), mid(0.95, 1.45);
        a0 = mid(rng);
        for (int j = 0; j < 3; ++j) {
            a[j] = amp(rng);
            p[j] = ph(rng);
        }
    }
    double v(double x) const {
        double s = a0;
        for (int j = 0; j < 3; ++j) s += a[j] * std::sin((j + 1) * kPi * x + p[j]);
        return s;
    }
    double d1(double x) const {
        double s = 0;
        for (int j = 0; j < 3; ++j) s += a[j] * (j + 1) * kPi * std::cos((j + 1) * kPi * x + p[j]);
        return s;
    }
    double d2(double x) const {
        double s = 0;
        for (int j = 0; j < 3; ++j) s -= a[j] * (j + 1) * (j + 1) * kPi * kPi * std::sin((j + 1) * kPi * x + p[j]);
        return s;
    }
    Profile profile() const {
        return Profile::from_functions(kN, [&](double x) { return v(x); }, [&](double x) { return d1(x); },
                                       [&](double x) { return d2(x); });
    }
};

}  // namespace

TEST(WarpingProfile, Validation) {
    EXPECT_THROW(WarpingProfile(Profile::constant(kN, 0.0), 3), InvalidInput);
    EXPECT_THROW(WarpingProfile(Profile::constant(kN, 1.0), 1), InvalidInput);
    EXPECT_THROW(ConformalFactor(Profile::constant(kN, -1.0)), InvalidInput);
}

TEST(WarpingProfile, SampledDerivativesConsistent) {
    const auto p = Profile::from_samples(GridFunction::sample(kN, [](double x) { return 1 + 0.3 * std::sin(2 * x); }));
    EXPECT_LE(p.consistency_error(), 1e-6);
    for (std::size_t i = 0; i < kN; i += 128) {
        EXPECT_NEAR(p.first()[i], 0.6 * std::cos(2 * p.value().x(i)), 1e-9);
        EXPECT_NEAR(p.second()[i], -1.2 * std::sin(2 * p.value().x(i)), 1e-6);
    }
    EXPECT_LE(exp_profile(3).profile().consistency_error(), 1e-6);
}

TEST(EffectivePotential, FlatProfile) {
    const auto q = effective_potential(WarpingProfile::flat(kN, 3), GridFunction::constant(kN, 2.5), 4.0);
    for (std::size_t i = 0; i < kN; ++i) EXPECT_DOUBLE_EQ(q[i], -1.5);
}

TEST(EffectivePotential, ExponentialProfile) {
    const auto zero = GridFunction::constant(kN, 0.0);
    const auto q3 = effective_potential(exp_profile(3), zero, 0.0);
    const auto q4 = effective_potential(exp_profile(4), zero, 0.0);
    for (std::size_t i = 0; i < kN; ++i) {
        EXPECT_NEAR(q3[i], 1.0, 1e-14);
        EXPECT_NEAR(q4[i], 4.0, 1e-14);
    }
}

TEST(EffectivePotential, ConstantRescalingInvariance) {
    const auto f = exp_profile(4);
    const double s = 1.7, lambda = 2.0;
    const auto v = GridFunction::sample(kN, [](double x) { return 1 + x * x; });
    const WarpingProfile fs(Profile(f.f().map([s](double y) { return s * y; }),
                                    f.df().map([s](double y) { return s * y; }),
                                    f.d2f().map([s](double y) { return s * y; })),
                            4);
    // (V - lambda) -> (V - lambda)/s^4, i.e. V -> lambda + (V - lambda)/s^4
    const auto vs = v.map([&](double y) { return lambda + (y - lambda) / std::pow(s, 4); });
    const auto a = effective_potential(f, v, lambda);
    const auto b = effective_potential(fs, vs, lambda);
    EXPECT_LE(sup_distance(a, b), 1e-12);
}

TEST(ConformalRescale, Basics) {
    const auto flat = WarpingProfile::flat(kN, 3);
    EXPECT_EQ(conformal_rescale(flat, ConformalFactor::identity(kN)), flat);
    const auto two = conformal_rescale(flat, ConformalFactor(Profile::constant(kN, 2.0)));
    EXPECT_EQ(two.f().min(), 2.0);
    EXPECT_EQ(two.f().max(), 2.0);
    EXPECT_EQ(two.df().sup_norm(), 0.0);
    EXPECT_EQ(two.d2f().sup_norm(), 0.0);
    const ConformalFactor c(Profile::from_functions(
        kN, [](double x) { return 1 + x * (1 - x); }, [](double x) { return 1 - 2 * x; }, [](double) { return -2.0; }));
    const auto r = conformal_rescale(flat, c);
    for (std::size_t i = 0; i < kN; ++i) EXPECT_DOUBLE_EQ(r.d2f()[i], -2.0);
}

TEST(ConformalPotential, IdentityFactorGivesZero) {
    const auto v = potential_of_conformal_factor(exp_profile(5), ConformalFactor::identity(kN), 3.0);
    EXPECT_EQ(v.sup_norm(), 0.0);
}

TEST(ConformalPotential, FlatThreeDimensionalReduction) {
    // lambda = 0, f = 1, n = 3: V = c''/c; with c = 2 + sin(pi x), c''/c = -pi^2 sin/(2+sin)
    const ConformalFactor c(Profile::from_functions(
        kN, [](double x) { return 2 + std::sin(kPi * x); }, [](double x) { return kPi * std::cos(kPi * x); },
        [](double x) { return -kPi * kPi * std::sin(kPi * x); }));
    const auto v = potential_of_conformal_factor(WarpingProfile::flat(kN, 3), c, 0.0);
    for (std::size_t i = 0; i < kN; ++i) {
        const double x = v.x(i);
        EXPECT_NEAR(v[i], -kPi * kPi * std::sin(kPi * x) / (2 + std::sin(kPi * x)), 1e-13);
    }
}

TEST(ConformalPotential, LinkIdentityRandomized) {
    std::mt19937_64 rng(20240611);
    const auto zero = GridFunction::constant(kN, 0.0);
    for (int trial = 0; trial < 20; ++trial) {
        const RandomSmooth fr(rng), cr(rng);
        for (int n : {3, 4, 5}) {
            const WarpingProfile f(fr.profile(), n);
            const ConformalFactor c(cr.profile());
            ASSERT_GE(f.f().min(), 0.5);
            ASSERT_LE(c.c().max(), 2.0);
            for (double lambda : {0.0, 2.0, -3.0}) {
                const auto lhs = effective_potential(conformal_rescale(f, c), zero, lambda);
                const auto rhs = effective_potential(f, potential_of_conformal_factor(f, c, lambda), lambda);
                EXPECT_LE(sup_distance(lhs, rhs), 1e-8) << trial << " n=" << n << " lambda=" << lambda;
            }
        }
    }
}

TEST(TransverseSpectrum, Circle) {
    const auto s = transverse_spectrum("circle", 4);
    const std::vector<TransverseEntry> want{{0, 1}, {1, 2}, {4, 2}, {9, 2}};
    EXPECT_EQ(s.entries(), want);
}

TEST(TransverseSpectrum, Torus2) {
    const auto s = transverse_spectrum("torus2", 20);
    const std::vector<TransverseEntry> head{{0, 1}, {1, 4}, {2, 4}, {4, 4}, {5, 8}};
    EXPECT_EQ(std::vector<TransverseEntry>(s.entries().begin(), s.entries().begin() + 5), head);
    const std::vector<double> want{0, 1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20, 25, 26, 29, 32, 34, 36, 37};
    EXPECT_EQ(s.mus(), want);
    // 25 = 0^2+5^2 = 3^2+4^2: 4 + 8 representations
    EXPECT_EQ(s.entries()[13].multiplicity, 12);
}

TEST(TransverseSpectrum, TorusD) {
    const auto s = transverse_spectrum("torusD(3)", 4);
    const std::vector<TransverseEntry> want{{0, 1}, {1, 6}, {2, 12}, {3, 8}};
    EXPECT_EQ(s.entries(), want);
    EXPECT_EQ(transverse_spectrum("torus2", 10000).size(), 10000u);
}

TEST(TransverseSpectrum, CustomValidation) {
    EXPECT_THROW(transverse_spectrum("sphere", 4), InvalidInput);
    const auto ok = custom_spectrum(nlohmann::json::parse(R"([{"mu":0,"multiplicity":1},{"mu":2,"multiplicity":3}])"));
    EXPECT_EQ(ok.label(), "custom");
    EXPECT_EQ(custom_spectrum(to_json(ok)), ok);
    EXPECT_THROW(custom_spectrum(nlohmann::json::parse(R"([{"mu":0},{"mu":6},{"mu":2}])")), InvalidInput);
    EXPECT_THROW(custom_spectrum(nlohmann::json::parse(R"([{"mu":1}])")), InvalidInput);
}
