#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "calderon/calderon.hpp"

using namespace calderon;
using namespace calderon::harness;
namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("calderon_" + tag + "_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::map<std::string, std::string> directory_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
    return out;
}

const Assertion& find(const ScenarioReport& r, const std::string& name) {
    for (const auto& a : r.assertions) {
        if (a.name == name) return a;
    }
    throw std::runtime_error("no assertion " + name);
}

}  // namespace

TEST(Config, RoundTripDefaults) {
    for (const auto& s : scenario_names()) {
        const auto c = default_config(s);
        const auto back = config_from_json(to_json(c));
        EXPECT_TRUE(back == c) << s;
        EXPECT_EQ(to_json(back).dump(), to_json(c).dump()) << s;
    }
}

TEST(Config, RoundTripShippedFiles) {
    std::size_t count = 0;
    for (const auto& e : fs::directory_iterator(fs::path(CALDERON_SOURCE_DIR) / "configs")) {
        if (e.path().extension() != ".json") continue;
        const auto c = load_config(e.path().string());
        EXPECT_NO_THROW(validate(c)) << e.path();
        EXPECT_TRUE(config_from_json(to_json(c)) == c) << e.path();
        ++count;
    }
    EXPECT_GE(count, 5u);
}

TEST(Config, RoundTripSplineAndCustomPatches) {
    auto c = default_config("q3");
    c.f = FunctionSpec::spline({1.0, 1.1, 1.3, 1.2, 1.05, 1.0});
    c.v = FunctionSpec::exp(1.5, -0.7);
    c.gamma_d = {Component::gamma1, 0.1, 0.9, 1.0, 2.0};
    c.tolerances["field"] = 3e-5;
    c.max_iters = 1234;
    EXPECT_TRUE(config_from_json(to_json(c)) == c);
}

TEST(Config, RejectsUnknownKeysAndWrongVersion) {
    auto j = to_json(default_config("q3"));
    j["colour"] = "blue";
    EXPECT_THROW(config_from_json(j), InvalidInput);
    auto k = to_json(default_config("q3"));
    k["schema_version"] = 2;
    EXPECT_THROW(config_from_json(k), InvalidInput);
    auto m = to_json(default_config("q3"));
    m.erase("schema_version");
    EXPECT_THROW(config_from_json(m), InvalidInput);
    auto f = to_json(default_config("q3"));
    f["f"] = {{"name", "cosh"}, {"params", Json::object()}};
    EXPECT_THROW(config_from_json(f), InvalidInput);
}

TEST(Config, ValidateRejectsBadValues) {
    auto c = default_config("q3");
    c.scenario = "q5";
    EXPECT_THROW(validate(c), InvalidInput);
    c = default_config("q3");
    c.grid = 10;
    EXPECT_THROW(validate(c), InvalidInput);
    c = default_config("q3");
    c.deformations = {{0, 0.3}};
    EXPECT_THROW(validate(c), InvalidInput);
    c = default_config("q3");
    c.eta1 = -1;
    EXPECT_THROW(validate(c), InvalidInput);
    c = default_config("q3");
    c.tolerances.erase("field");
    EXPECT_THROW(validate(c), InvalidInput);
}

TEST(FunctionSpec, BuiltinsMatchClosedForms) {
    constexpr double pi = std::numbers::pi;
    const auto s = FunctionSpec::one_plus_sin(2.0, 0.5).grid(129);
    const auto e = FunctionSpec::exp(1.5, -0.7).profile(129);
    for (std::size_t i = 0; i < 129; ++i) {
        const double x = s.x(i);
        EXPECT_NEAR(s[i], 2.0 + std::sin(pi * x), 1e-14);
        EXPECT_NEAR(e.value()[i], 1.5 * std::exp(-0.7 * x), 1e-14);
        EXPECT_NEAR(e.second()[i], 1.5 * 0.49 * std::exp(-0.7 * x), 1e-13);
    }
}

TEST(FunctionSpec, SplineReproducesLines) {
    std::vector<double> samples;
    for (int i = 0; i <= 8; ++i) samples.push_back(1.0 + 0.25 * i / 8.0);
    const auto p = FunctionSpec::spline(samples).profile(257);
    for (std::size_t i = 0; i < 257; ++i) {
        EXPECT_NEAR(p.value()[i], 1.0 + 0.25 * p.value().x(i), 1e-12);
        EXPECT_NEAR(p.first()[i], 0.25, 1e-10);
    }
    EXPECT_THROW(FunctionSpec::spline({1, 2, 3}).validate(), InvalidInput);
}

TEST(Cache, FnvKnownVectors) {
    EXPECT_EQ(Fnv1a().hex(), "cbf29ce484222325");
    EXPECT_EQ(Fnv1a().bytes("a", 1).hex(), "af63dc4c8601ec8c");
    EXPECT_EQ(Fnv1a().bytes("foobar", 6).hex(), "85944171f73967e8");
}

TEST(Cache, WarmRunsAreByteIdenticalToCold) {
    TempDir cache_dir("cache"), cold("cold"), warm("warm");
    auto c = default_config("q3");
    c.deformations = {{1, 0.3}, {2, -1.0}};
    {
        Cache cache(cache_dir.path().string());
        emit_all(run_scenario(c, cache, 2), cold.path());
        EXPECT_EQ(cache.hits(), 0u);
        EXPECT_GT(cache.misses(), 0u);
    }
    Cache cache(cache_dir.path().string());
    emit_all(run_scenario(c, cache, 3), warm.path());
    EXPECT_GT(cache.hits(), 0u);
    EXPECT_EQ(cache.misses(), 0u);
    EXPECT_EQ(directory_contents(cold.path()), directory_contents(warm.path()));
}

TEST(Cache, TornFileIsAMiss) {
    TempDir dir("torn");
    const auto q = GridFunction::constant(65, 0.0);
    {
        Cache cache(dir.path().string());
        cache.dirichlet_spectrum(q, 3);
    }
    for (const auto& e : fs::directory_iterator(dir.path())) std::ofstream(e.path()) << "{ not json";
    Cache cache(dir.path().string());
    const auto s = cache.dirichlet_spectrum(q, 3);
    EXPECT_EQ(cache.misses(), 1u);
    EXPECT_NEAR(s.alphas[0], -std::numbers::pi * std::numbers::pi, 1e-8);
}

TEST(Report, NumberFormatting) {
    EXPECT_EQ(format_number(0.1), "1.000000000000e-01");
    EXPECT_EQ(format_number(-2.5e-300), "-2.500000000000e-300");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(json_number(1.0 / 3.0).dump(), Json(0.3333333333333).dump());
}

TEST(Report, EmptyReportIsValid) {
    TempDir dir("empty");
    ScenarioReport r;
    r.scenario = "q3";
    emit_all(r, dir.path());
    const auto j = Json::parse(slurp(dir.path() / "report.json"));
    EXPECT_TRUE(j.at("passed").get<bool>());
    EXPECT_TRUE(j.at("assertions").empty());
    EXPECT_TRUE(fs::exists(dir.path() / "report.txt"));
}

TEST(Report, NonFiniteAchievedFails) {
    ScenarioReport r;
    r.check("x", "finite", std::nan(""), Relation::at_most, 1.0);
    EXPECT_FALSE(r.passed());
}

TEST(Report, RerunIsByteIdentical) {
    TempDir a("rerun_a"), b("rerun_b");
    Cache none;
    const auto c = default_config("gauge");
    emit_all(run_scenario(c, none, 1), a.path());
    emit_all(run_scenario(c, none, 4), b.path());
    EXPECT_EQ(directory_contents(a.path()), directory_contents(b.path()));
}

TEST(Report, TableHasOneRowPerHarmonic) {
    TempDir dir("rows");
    Cache none;
    const auto c = default_config("q3");
    const auto r = run_scenario(c, none, 2);
    emit_all(r, dir.path());
    const auto csv = slurp(dir.path() / "table_dn_base.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(c.harmonics) + 1);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "mu,delta,M,N,a00,a01,a10,a11");
}

TEST(Scenario, Q3DefaultPasses) {
    Cache none;
    const auto r = run_scenario(default_config("q3"), none, 2);
    EXPECT_TRUE(r.passed());
    EXPECT_LE(find(r, "k1_t0.3_zero_to_one").achieved, 1e-7);
    EXPECT_GT(find(r, "k1_t0.3_diagonal_separation").achieved, 1e-3);
}

TEST(Scenario, ZeroFlowTimeGivesZeroDifferences) {
    Cache none;
    auto c = default_config("q3");
    c.deformations = {{1, 0.0}};
    const auto r = run_scenario(c, none, 1);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(find(r, "k1_t0_diagonal_unchanged").achieved, 0.0);
    EXPECT_EQ(find(r, "k1_t0_zero_to_one").achieved, 0.0);

    auto q2 = default_config("q2");
    q2.deformations = {{1, 0.0}};
    const auto r2 = run_scenario(q2, none, 1);
    EXPECT_TRUE(r2.passed());
    EXPECT_EQ(find(r2, "k1_t0_factors_equal").achieved, 0.0);
}

TEST(Scenario, LambdaOnDirichletEigenvalueIsRejectedFirst) {
    // f = 1: the zero harmonic is inadmissible exactly when lambda is a Dirichlet eigenvalue of -d^2 + V
    auto c = default_config("q3");
    const auto v = c.potential();
    const double alpha1 = dirichlet_spectrum(v, 1).alphas[0];
    c.lambda = -alpha1 + 1e-10;
    Cache none;
    try {
        run_scenario(c, none, 1);
        FAIL() << "expected rejection";
    } catch (const AdmissibilityError& e) {
        EXPECT_EQ(e.mu(), 0.0);
        EXPECT_NE(std::string(e.what()).find("lambda-admissibility"), std::string::npos);
    }
    c.scenario = "gauge";
    c.v = FunctionSpec::constant(0.0);
    c.lambda = std::numbers::pi * std::numbers::pi + 1e-10;
    c.eta1 = 4.0;
    c.deformations.clear();
    EXPECT_THROW(run_scenario(c, none, 1), AdmissibilityError);
}

TEST(Scenario, SameSideControlAtZeroFlow) {
    Cache none;
    auto c = default_config("same-side");
    c.deformations = {{1, 0.0}, {1, 0.3}, {1, 1.0}};
    const auto r = run_scenario(c, none, 2);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(find(r, "k1_t0_control").achieved, 0.0);
    EXPECT_GT(find(r, "k1_t1_separation").achieved, find(r, "k1_t0.3_separation").achieved);
}

TEST(Scenario, GaugeDegenerateIsFlagged) {
    Cache none;
    auto c = default_config("gauge");
    c.eta1 = 1.0;
    const auto r = run_scenario(c, none, 2);
    EXPECT_TRUE(r.degenerate);
    EXPECT_TRUE(r.passed());
    EXPECT_LE(find(r, "multiplier_constant").achieved, 1e-9);
}

TEST(Scenario, GaugePreconditions) {
    Cache none;
    auto c = default_config("gauge");
    c.eta0 = 2.0;
    EXPECT_THROW(run_scenario(c, none, 1), InvalidInput);
    c = default_config("gauge");
    c.gamma_n = c.gamma_d;
    EXPECT_THROW(run_scenario(c, none, 1), InvalidInput);
    c = default_config("gauge");
    c.v = FunctionSpec::constant(1.0);
    EXPECT_THROW(run_scenario(c, none, 1), InvalidInput);
}

TEST(Scenario, NegativeLambdaQ2UsesLinearBounds) {
    Cache none;
    const auto c = load_config((fs::path(CALDERON_SOURCE_DIR) / "configs" / "q2_negative_lambda.json").string());
    const auto r = run_scenario(c, none, 2);
    EXPECT_TRUE(r.passed());
    bool saw_case = false;
    for (const auto& [k, v] : r.notes) saw_case = saw_case || (k == "base_case" && v == "4");
    EXPECT_TRUE(saw_case);
}

TEST(Scenario, LinkIsSeededAndDeterministic) {
    Cache none;
    auto c = default_config("link");
    c.trials = 4;
    const auto a = run_scenario(c, none, 1);
    const auto b = run_scenario(c, none, 3);
    EXPECT_TRUE(a.passed());
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    c.seed += 1;
    const auto d = run_scenario(c, none, 1);
    EXPECT_NE(to_json(a).dump(), to_json(d).dump());
}
