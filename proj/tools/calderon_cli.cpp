#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "calderon/calderon.hpp"

namespace fs = std::filesystem;
using namespace calderon;
using namespace calderon::harness;

namespace {

struct Options {
    std::string config;
    std::size_t grid = 0;
    std::string out;
    std::string cache;
    std::size_t modes = 0;
    std::size_t jobs = 1;
    std::string scenario;
};

ScenarioConfig resolve_config(const Options& o, const std::string& scenario_hint) {
    ScenarioConfig c = o.config.empty() ? default_config(scenario_hint.empty() ? "q3" : scenario_hint)
                                        : load_config(o.config);
    if (!scenario_hint.empty() && !o.config.empty() && c.scenario != scenario_hint) {
        throw InvalidInput("config is for scenario '" + c.scenario + "', not '" + scenario_hint + "'");
    }
    if (o.grid) c.grid = o.grid;
    if (o.modes) c.modes = o.modes;
    validate(c);
    return c;
}

/// Writes the table to <out>/<file> when --out is set, else to stdout.
void emit_table(const Options& o, const Table& t, const std::string& file) {
    if (o.out.empty()) {
        write_table_csv(std::cout, t);
        return;
    }
    fs::create_directories(o.out);
    std::ostringstream os;
    write_table_csv(os, t);
    write_file(fs::path(o.out) / file, os.str());
    std::cout << "wrote " << (fs::path(o.out) / file).string() << '\n';
}

int cmd_eigs(const Options& o) {
    const auto c = resolve_config(o, "");
    Cache cache(o.cache.empty() ? c.cache_dir : o.cache);
    const auto q = effective_potential(c.warping(), c.potential(), c.lambda);
    const auto spec = cache.dirichlet_spectrum(q, c.eigenvalues, o.jobs);
    Table t{"eigs", {"k", "alpha"}, {}};
    for (std::size_t k = 0; k < spec.size(); ++k) t.rows.push_back({static_cast<double>(k + 1), spec.alphas[k]});
    emit_table(o, t, "table_eigs.csv");
    return 0;
}

int cmd_deform(const Options& o) {
    const auto c = resolve_config(o, "");
    Cache cache(o.cache.empty() ? c.cache_dir : o.cache);
    const auto f = c.warping();
    const auto v = c.potential();
    const auto q = effective_potential(f, v, c.lambda);
    int kmax = 1;
    for (const auto& d : c.deformations) kmax = std::max(kmax, d.k);
    const auto spec = cache.dirichlet_spectrum(q, std::max<std::size_t>(kmax, 1), o.jobs);
    Table t{"deform", {"x", "V"}, {}};
    std::vector<GridFunction> cols;
    for (const auto& d : c.deformations) {
        cols.push_back(deform_cylinder_potential(v, f, make_theta(spec, d.k, d.t)));
        char name[48];
        std::snprintf(name, sizeof name, "V_k%d_t%g", d.k, d.t);
        t.columns.emplace_back(name);
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::vector<double> row{v.x(i), v[i]};
        for (const auto& g : cols) row.push_back(g[i]);
        t.rows.push_back(std::move(row));
    }
    emit_table(o, t, "table_deform.csv");
    return 0;
}

int cmd_dn(const Options& o) {
    const auto c = resolve_config(o, "");
    Cache cache(o.cache.empty() ? c.cache_dir : o.cache);
    const DnModel model(c.warping(), c.potential(), c.lambda);
    const auto blocks = cache.blocks(model, c.transverse().mus(), o.jobs);
    Table t{"dn", {"mu", "delta", "M", "N", "a00", "a01", "a10", "a11"}, {}};
    for (const auto& b : blocks) t.rows.push_back({b.mu, b.delta, b.m, b.n_fn, b.a00, b.a01, b.a10, b.a11});
    emit_table(o, t, "table_dn.csv");
    return 0;
}

int cmd_gauge_solve(const Options& o) {
    auto c = o.config.empty() ? default_config("gauge") : load_config(o.config);
    if (o.grid) c.grid = o.grid;
    validate(c);
    IterationOptions opt;
    opt.max_iters = c.max_iters;
    const auto sol = solve_gauge_problem(c.warping(), c.lambda, c.eta0, c.eta1, opt);
    Table t{"gauge", {"x", "w", "c"}, {}};
    for (std::size_t i = 0; i < sol.w.size(); ++i) t.rows.push_back({sol.w.x(i), sol.w[i], sol.c.c()[i]});
    emit_table(o, t, "table_gauge.csv");
    std::cerr << "case " << sol.bounds.case_tag << ", iterations " << sol.report.iterations() << ", residual "
              << format_number(sol.report.final_residual()) << ", sup|V_c| " << format_number(sol.round_trip_error)
              << '\n';
    return 0;
}

int cmd_scenario(const Options& o) {
    if (o.scenario.empty() && o.config.empty()) throw InvalidInput("scenario: give a name or --config");
    const auto c = resolve_config(o, o.scenario);
    Cache cache(o.cache.empty() ? c.cache_dir : o.cache);
    const auto r = run_scenario(c, cache, o.jobs);
    std::string dir = o.out.empty() ? c.output_dir : o.out;
    if (dir.empty()) dir = "results/" + c.scenario;
    emit_all(r, dir);
    write_text(std::cout, r);
    std::cout << "report written to " << dir << '\n';
    std::printf("runtime %.3f s\n", r.runtime_seconds);
    return r.passed() ? 0 : 1;
}

/// Quick closed-form checks on the zero potential and a small link sweep.
int cmd_selftest(const Options& o) {
    constexpr double pi = std::numbers::pi;
    const std::size_t n = o.grid ? o.grid : 2049;
    const auto zero = GridFunction::constant(n, 0.0);
    bool ok = true;
    auto line = [&](const char* name, double achieved, double tol) {
        const bool pass = achieved <= tol;
        ok = ok && pass;
        std::printf("%s %-28s %s <= %s\n", pass ? "pass" : "FAIL", name, format_number(achieved).c_str(),
                    format_number(tol).c_str());
    };
    const auto spec = dirichlet_spectrum(zero, 10, o.jobs);
    double eig = 0;
    for (std::size_t k = 0; k < 10; ++k) {
        const double exact = -double((k + 1) * (k + 1)) * pi * pi;
        eig = std::max(eig, std::abs(spec.alphas[k] - exact) / std::abs(exact));
    }
    line("zero-potential eigenvalues", eig, 1e-8);
    double delta = 0;
    for (double mu : {0.5, 1.0, 4.0, 25.0, 100.0}) {
        const double exact = std::sinh(std::sqrt(mu)) / std::sqrt(mu);
        delta = std::max(delta, std::abs(characteristic(zero, mu).value() - exact) / exact);
    }
    line("characteristic function", delta, 1e-9);
    auto cfg = default_config("link");
    cfg.trials = 3;
    cfg.grid = n;
    Cache cache;
    const auto r = run_scenario(cfg, cache, o.jobs);
    line("link identity", r.passed() ? 0.0 : 1.0, 0.0);
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical experiments with disjoint-data DN maps on warped cylinders"};
    app.require_subcommand(1);
    Options o;
    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON scenario config")->check(CLI::ExistingFile);
        sub->add_option("--grid", o.grid, "grid points on [0,1] (overrides the config)");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--cache", o.cache, "cache directory (CALDERON_CACHE takes precedence)");
        sub->add_option("--modes", o.modes, "cosine modes per axis for field synthesis");
        sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    };
    auto* eigs = app.add_subcommand("eigs", "Dirichlet eigenvalues of the effective potential");
    auto* deform = app.add_subcommand("deform", "isospectral deformations of V");
    auto* dn = app.add_subcommand("dn", "per-harmonic DN coefficients");
    auto* gauge = app.add_subcommand("gauge-solve", "conformal factor solving the gauge equation");
    auto* scenario = app.add_subcommand("scenario", "run a scenario and write its report");
    scenario->add_option("name", o.scenario, "q3 | q2 | gauge | same-side | link")
        ->check(CLI::IsMember(scenario_names()));
    auto* selftest = app.add_subcommand("selftest", "closed-form sanity checks");
    for (auto* s : {eigs, deform, dn, gauge, scenario, selftest}) common(s);

    CLI11_PARSE(app, argc, argv);
    try {
        if (eigs->parsed()) return cmd_eigs(o);
        if (deform->parsed()) return cmd_deform(o);
        if (dn->parsed()) return cmd_dn(o);
        if (gauge->parsed()) return cmd_gauge_solve(o);
        if (scenario->parsed()) return cmd_scenario(o);
        if (selftest->parsed()) return cmd_selftest(o);
    } catch (const AdmissibilityError& e) {
        std::cerr << "inadmissible: " << e.what() << " (mu = " << e.mu() << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
