#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <json.hpp>

#include "calderon/deform.hpp"
#include "calderon/dnmap.hpp"
#include "calderon/error.hpp"
#include "calderon/geometry.hpp"
#include "calderon/grid_function.hpp"

namespace calderon::harness {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Built-in function of x on [0, 1]:
///   constant      {value}
///   exp           {amplitude, rate}               amplitude e^{rate x}
///   one_plus_sin  {scale, amplitude, frequency}   scale (1 + amplitude sin(frequency pi x))
///   spline        {samples: [...]}                cubic B-spline through equispaced samples
struct FunctionSpec {
    std::string name = "constant";
    std::map<std::string, double> params{{"value", 0.0}};
    std::vector<double> samples;

    static FunctionSpec constant(double v) { return {"constant", {{"value", v}}, {}}; }
    static FunctionSpec exp(double amplitude, double rate) {
        return {"exp", {{"amplitude", amplitude}, {"rate", rate}}, {}};
    }
    static FunctionSpec one_plus_sin(double scale, double amplitude, double frequency = 1.0) {
        return {"one_plus_sin", {{"scale", scale}, {"amplitude", amplitude}, {"frequency", frequency}}, {}};
    }
    static FunctionSpec spline(std::vector<double> s) { return {"spline", {}, std::move(s)}; }

    double param(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end()) throw InvalidInput("function '" + name + "' needs parameter '" + key + "'");
        return it->second;
    }

    void validate() const {
        if (name == "constant") {
            param("value");
        } else if (name == "exp") {
            param("amplitude");
            param("rate");
        } else if (name == "one_plus_sin") {
            param("scale");
            param("amplitude");
            param("frequency");
        } else if (name == "spline") {
            if (samples.size() < 5) throw InvalidInput("spline needs at least 5 samples");
        } else {
            throw InvalidInput("unknown function '" + name + "' (constant, exp, one_plus_sin, spline)");
        }
    }

    /// Values and exact first/second derivatives on an n-point grid.
    Profile profile(std::size_t n) const {
        validate();
        constexpr double pi = std::numbers::pi;
        if (name == "constant") return Profile::constant(n, param("value"));
        if (name == "exp") {
            const double a = param("amplitude"), r = param("rate");
            return Profile::from_functions(
                n, [=](double x) { return a * std::exp(r * x); }, [=](double x) { return a * r * std::exp(r * x); },
                [=](double x) { return a * r * r * std::exp(r * x); });
        }
        if (name == "one_plus_sin") {
            const double s = param("scale"), a = param("amplitude"), w = param("frequency") * pi;
            return Profile::from_functions(
                n, [=](double x) { return s * (1 + a * std::sin(w * x)); },
                [=](double x) { return s * a * w * std::cos(w * x); },
                [=](double x) { return -s * a * w * w * std::sin(w * x); });
        }
        const double h = 1.0 / static_cast<double>(samples.size() - 1);
        const boost::math::interpolators::cardinal_cubic_b_spline<double> sp(samples.begin(), samples.end(), 0.0, h);
        return Profile::from_functions(
            n, [&](double x) { return sp(x); }, [&](double x) { return sp.prime(x); },
            [&](double x) { return sp.double_prime(x); });
    }

    GridFunction grid(std::size_t n) const { return profile(n).value(); }

    bool operator==(const FunctionSpec&) const = default;
};

inline Json to_json(const FunctionSpec& s) {
    Json j;
    j["name"] = s.name;
    if (s.name == "spline") {
        j["samples"] = s.samples;
    } else {
        Json p = Json::object();
        for (const auto& [k, v] : s.params) p[k] = v;
        j["params"] = p;
    }
    return j;
}

inline FunctionSpec function_from_json(const Json& j) {
    FunctionSpec s;
    s.name = j.at("name").get<std::string>();
    s.params.clear();
    if (j.contains("params")) {
        for (const auto& [k, v] : j.at("params").items()) s.params[k] = v.get<double>();
    }
    if (j.contains("samples")) s.samples = j.at("samples").get<std::vector<double>>();
    s.validate();
    return s;
}

struct Deformation {
    int k = 1;
    double t = 0.0;
    bool operator==(const Deformation&) const = default;
};

struct ScenarioConfig {
    std::string scenario = "q3";
    int n_dim = 3;
    double lambda = 5.0;
    FunctionSpec f = FunctionSpec::constant(1.0);
    FunctionSpec v = FunctionSpec::one_plus_sin(2.0, 0.5);
    std::vector<Deformation> deformations{{1, 0.3}};
    std::string spectrum = "torus2";
    std::size_t harmonics = 20;
    std::size_t eigenvalues = 15;
    double eta0 = 1.0;
    double eta1 = 1.0;
    BoundaryPatch gamma_d{Component::gamma0, 0.5, 2.5, 0.5, 2.5};
    BoundaryPatch gamma_n{Component::gamma0, 3.5, 5.5, 0.5, 2.5};
    std::size_t modes = 32;
    std::size_t grid = 2049;
    std::uint64_t seed = 20240611;
    std::size_t trials = 20;
    /// Monotone iteration budget; stiff nonlinearities (large upper solutions) need more.
    std::size_t max_iters = 500;
    std::map<std::string, double> tolerances = default_tolerances();
    std::string output_dir;
    std::string cache_dir;

    static std::map<std::string, double> default_tolerances() {
        return {{"boundary", 1e-8},        {"conformal_distinct", 1e-3}, {"control", 1e-2},
                {"diagonal_separation", 1e-3}, {"eigenvalue_rel", 1e-7},   {"field", 1e-4},
                {"link", 1e-8},            {"multiplier_spread", 1e-6},  {"off_diagonal_rel", 1e-7},
                {"potential_change", 1e-2}, {"round_trip", 1e-7},        {"metric_off_diagonal_rel", 1e-6}};
    }

    double tol(const std::string& key) const {
        auto it = tolerances.find(key);
        if (it == tolerances.end()) throw InvalidInput("missing tolerance '" + key + "'");
        return it->second;
    }

    WarpingProfile warping() const { return WarpingProfile(f.profile(grid), n_dim); }
    GridFunction potential() const { return v.grid(grid); }
    TransverseSpectrum transverse() const { return transverse_spectrum(spectrum, harmonics); }

    bool operator==(const ScenarioConfig& o) const {
        auto patch_eq = [](const BoundaryPatch& a, const BoundaryPatch& b) {
            return a.component == b.component && a.t1a == b.t1a && a.t1b == b.t1b && a.t2a == b.t2a &&
                   a.t2b == b.t2b;
        };
        return scenario == o.scenario && n_dim == o.n_dim && lambda == o.lambda && f == o.f && v == o.v &&
               deformations == o.deformations && spectrum == o.spectrum && harmonics == o.harmonics &&
               eigenvalues == o.eigenvalues && eta0 == o.eta0 && eta1 == o.eta1 && patch_eq(gamma_d, o.gamma_d) &&
               patch_eq(gamma_n, o.gamma_n) && modes == o.modes && grid == o.grid && seed == o.seed &&
               trials == o.trials && max_iters == o.max_iters && tolerances == o.tolerances && output_dir == o.output_dir &&
               cache_dir == o.cache_dir;
    }
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"q3", "q2", "gauge", "same-side", "link"};
    return names;
}

inline Json to_json(const BoundaryPatch& p) {
    return Json{{"component", p.component == Component::gamma0 ? 0 : 1},
                {"theta1", {p.t1a, p.t1b}},
                {"theta2", {p.t2a, p.t2b}}};
}

inline BoundaryPatch patch_from_json(const Json& j) {
    BoundaryPatch p;
    const int comp = j.at("component").get<int>();
    if (comp != 0 && comp != 1) throw InvalidInput("patch component must be 0 or 1");
    p.component = comp == 0 ? Component::gamma0 : Component::gamma1;
    const auto a = j.at("theta1").get<std::vector<double>>();
    const auto b = j.at("theta2").get<std::vector<double>>();
    if (a.size() != 2 || b.size() != 2) throw InvalidInput("patch angles must be [lo, hi] pairs");
    p.t1a = a[0];
    p.t1b = a[1];
    p.t2a = b[0];
    p.t2b = b[1];
    p.validate();
    return p;
}

inline Json to_json(const ScenarioConfig& c) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["scenario"] = c.scenario;
    j["n_dim"] = c.n_dim;
    j["lambda"] = c.lambda;
    j["f"] = to_json(c.f);
    j["V"] = to_json(c.v);
    Json defs = Json::array();
    for (const auto& d : c.deformations) defs.push_back({{"k", d.k}, {"t", d.t}});
    j["deformations"] = defs;
    j["spectrum"] = {{"label", c.spectrum}, {"count", c.harmonics}};
    j["eigenvalues"] = c.eigenvalues;
    j["eta"] = {c.eta0, c.eta1};
    j["patches"] = {{"dirichlet", to_json(c.gamma_d)}, {"neumann", to_json(c.gamma_n)}};
    j["modes"] = c.modes;
    j["grid"] = c.grid;
    j["seed"] = c.seed;
    j["trials"] = c.trials;
    j["max_iters"] = c.max_iters;
    Json tol = Json::object();
    for (const auto& [k, v] : c.tolerances) tol[k] = v;
    j["tolerances"] = tol;
    j["output_dir"] = c.output_dir;
    j["cache_dir"] = c.cache_dir;
    return j;
}

/// Missing keys take the defaults above; unknown keys are rejected.
inline ScenarioConfig config_from_json(const Json& j) {
    static const std::vector<std::string> known{
        "schema_version", "scenario", "n_dim", "lambda",  "f",      "V",         "deformations", "spectrum",
        "eigenvalues",    "eta",      "patches", "modes", "grid",   "seed",      "trials",       "tolerances",
        "output_dir",     "cache_dir", "max_iters"};
    if (!j.is_object()) throw InvalidInput("config must be a JSON object");
    for (const auto& [k, _] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) throw InvalidInput("unknown config key '" + k + "'");
    }
    const int version = j.value("schema_version", 0);
    if (version != kSchemaVersion) {
        throw InvalidInput("config schema_version must be " + std::to_string(kSchemaVersion));
    }
    ScenarioConfig c;
    try {
        c.scenario = j.value("scenario", c.scenario);
        c.n_dim = j.value("n_dim", c.n_dim);
        c.lambda = j.value("lambda", c.lambda);
        if (j.contains("f")) c.f = function_from_json(j.at("f"));
        if (j.contains("V")) c.v = function_from_json(j.at("V"));
        if (j.contains("deformations")) {
            c.deformations.clear();
            for (const auto& d : j.at("deformations")) c.deformations.push_back({d.at("k").get<int>(), d.at("t").get<double>()});
        }
        if (j.contains("spectrum")) {
            c.spectrum = j.at("spectrum").value("label", c.spectrum);
            c.harmonics = j.at("spectrum").value("count", c.harmonics);
        }
        c.eigenvalues = j.value("eigenvalues", c.eigenvalues);
        if (j.contains("eta")) {
            const auto e = j.at("eta").get<std::vector<double>>();
            if (e.size() != 2) throw InvalidInput("eta must be [eta0, eta1]");
            c.eta0 = e[0];
            c.eta1 = e[1];
        }
        if (j.contains("patches")) {
            c.gamma_d = patch_from_json(j.at("patches").at("dirichlet"));
            c.gamma_n = patch_from_json(j.at("patches").at("neumann"));
        }
        c.modes = j.value("modes", c.modes);
        c.grid = j.value("grid", c.grid);
        c.seed = j.value("seed", c.seed);
        c.trials = j.value("trials", c.trials);
        c.max_iters = j.value("max_iters", c.max_iters);
        if (j.contains("tolerances")) {
            for (const auto& [k, v] : j.at("tolerances").items()) c.tolerances[k] = v.get<double>();
        }
        c.output_dir = j.value("output_dir", c.output_dir);
        c.cache_dir = j.value("cache_dir", c.cache_dir);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    return c;
}

/// Structural checks that need no solves.
inline void validate(const ScenarioConfig& c) {
    if (std::find(scenario_names().begin(), scenario_names().end(), c.scenario) == scenario_names().end()) {
        throw InvalidInput("unknown scenario '" + c.scenario + "'");
    }
    if (c.n_dim < 2) throw InvalidInput("n_dim must be >= 2");
    if (c.grid < GridFunction::kMinPoints) throw InvalidInput("grid must have at least 33 points");
    if (c.harmonics == 0) throw InvalidInput("spectrum count must be positive");
    if (c.modes == 0) throw InvalidInput("modes must be positive");
    if (c.max_iters == 0) throw InvalidInput("max_iters must be positive");
    c.f.validate();
    c.v.validate();
    for (const auto& d : c.deformations) {
        if (d.k < 1) throw InvalidInput("deformation index k must be >= 1");
        if (!(std::abs(d.t) <= kMaxFlowTime)) throw InvalidInput("deformation |t| must be at most 5");
    }
    if (!(c.eta0 > 0) || !(c.eta1 > 0)) throw InvalidInput("eta must be positive");
    c.gamma_d.validate();
    c.gamma_n.validate();
    transverse_spectrum(c.spectrum, 1);
    for (const auto& [k, v] : ScenarioConfig::default_tolerances()) c.tol(k);
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

/// Defaults for each scenario; configs/ holds the same documents as files.
inline ScenarioConfig default_config(const std::string& scenario) {
    ScenarioConfig c;
    c.scenario = scenario;
    if (scenario == "q3" || scenario == "same-side" || scenario == "q2") {
        c.deformations = {{1, 0.3}};
    } else if (scenario == "gauge") {
        c.lambda = 0.0;
        c.v = FunctionSpec::constant(0.0);
        c.deformations.clear();
        c.eta1 = 4.0;
    } else if (scenario == "link") {
        c.deformations.clear();
    } else {
        throw InvalidInput("unknown scenario '" + scenario + "'");
    }
    return c;
}

}  // namespace calderon::harness
