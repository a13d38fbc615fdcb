#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "calderon/error.hpp"

namespace calderon::harness {

enum class Relation { at_most, greater, at_least, less };

inline const char* relation_symbol(Relation r) {
    switch (r) {
        case Relation::at_most: return "<=";
        case Relation::greater: return ">";
        case Relation::at_least: return ">=";
        case Relation::less: return "<";
    }
    return "?";
}

struct Assertion {
    std::string name;
    /// What is being checked, in words.
    std::string property;
    Relation relation = Relation::at_most;
    double tolerance = 0.0;
    double achieved = 0.0;
    bool passed = false;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct FieldGrid {
    std::string name;
    std::vector<std::vector<double>> values;
};

struct ScenarioReport {
    std::string scenario;
    nlohmann::ordered_json config;
    std::vector<Assertion> assertions;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::pair<std::string, std::string>> notes;
    std::vector<Table> tables;
    std::vector<FieldGrid> fields;
    bool degenerate = false;
    /// Wall time; printed to stdout, never written to report files.
    double runtime_seconds = 0.0;

    bool passed() const {
        for (const auto& a : assertions) {
            if (!a.passed) return false;
        }
        return true;
    }

    const Assertion& check(std::string name, std::string property, double achieved, Relation rel, double tol) {
        bool ok = false;
        if (std::isfinite(achieved)) {
            switch (rel) {
                case Relation::at_most: ok = achieved <= tol; break;
                case Relation::greater: ok = achieved > tol; break;
                case Relation::at_least: ok = achieved >= tol; break;
                case Relation::less: ok = achieved < tol; break;
            }
        }
        assertions.push_back({std::move(name), std::move(property), rel, tol, achieved, ok});
        return assertions.back();
    }

    const Assertion& check_flag(std::string name, std::string property, bool ok) {
        return check(std::move(name), std::move(property), ok ? 1.0 : 0.0, Relation::at_least, 1.0);
    }

    void metric(std::string name, double value) { metrics.emplace_back(std::move(name), value); }
    void note(std::string key, std::string value) { notes.emplace_back(std::move(key), std::move(value)); }
};

/// %.12e; non-finite values spelled out.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

/// JSON number carrying exactly the digits of format_number.
inline nlohmann::ordered_json json_number(double v) {
    if (!std::isfinite(v)) return format_number(v);
    return std::strtod(format_number(v).c_str(), nullptr);
}

inline nlohmann::ordered_json to_json(const ScenarioReport& r) {
    using J = nlohmann::ordered_json;
    J j;
    j["scenario"] = r.scenario;
    j["passed"] = r.passed();
    j["degenerate"] = r.degenerate;
    J as = J::array();
    for (const auto& a : r.assertions) {
        as.push_back({{"name", a.name},
                      {"property", a.property},
                      {"relation", relation_symbol(a.relation)},
                      {"tolerance", json_number(a.tolerance)},
                      {"achieved", json_number(a.achieved)},
                      {"passed", a.passed}});
    }
    j["assertions"] = as;
    J m = J::object();
    for (const auto& [k, v] : r.metrics) m[k] = json_number(v);
    j["metrics"] = m;
    J n = J::object();
    for (const auto& [k, v] : r.notes) n[k] = v;
    j["notes"] = n;
    J ts = J::array();
    for (const auto& t : r.tables) {
        ts.push_back({{"name", t.name}, {"file", "table_" + t.name + ".csv"}, {"columns", t.columns},
                      {"rows", t.rows.size()}});
    }
    j["tables"] = ts;
    J fs = J::array();
    for (const auto& f : r.fields) {
        fs.push_back({{"name", f.name},
                      {"file", "field_" + f.name + ".csv"},
                      {"shape", {f.values.size(), f.values.empty() ? 0 : f.values.front().size()}}});
    }
    j["fields"] = fs;
    j["config"] = r.config;
    return j;
}

inline void write_table_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
        os << '\n';
    }
}

inline void write_field_csv(std::ostream& os, const FieldGrid& f) {
    for (const auto& row : f.values) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
        os << '\n';
    }
}

inline void write_text(std::ostream& os, const ScenarioReport& r) {
    os << "scenario " << r.scenario << ": " << (r.passed() ? "PASS" : "FAIL") << (r.degenerate ? " (degenerate)" : "")
       << '\n';
    for (const auto& a : r.assertions) {
        os << (a.passed ? "  pass  " : "  FAIL  ") << a.name << ": " << format_number(a.achieved) << ' '
           << relation_symbol(a.relation) << ' ' << format_number(a.tolerance) << "  (" << a.property << ")\n";
    }
    for (const auto& [k, v] : r.metrics) os << "  metric " << k << " = " << format_number(v) << '\n';
    for (const auto& [k, v] : r.notes) os << "  note " << k << ": " << v << '\n';
}

enum class ReportFormat { json, csv, text };

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
    if (!out) throw Error("write failed for " + p.string());
}

/// Writes report.json, the table_/field_ CSV files, or report.txt into dir.
inline void emit_report(const ScenarioReport& r, ReportFormat format, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    switch (format) {
        case ReportFormat::json:
            write_file(dir / "report.json", to_json(r).dump(2) + "\n");
            break;
        case ReportFormat::csv:
            for (const auto& t : r.tables) {
                std::ostringstream os;
                write_table_csv(os, t);
                write_file(dir / ("table_" + t.name + ".csv"), os.str());
            }
            for (const auto& f : r.fields) {
                std::ostringstream os;
                write_field_csv(os, f);
                write_file(dir / ("field_" + f.name + ".csv"), os.str());
            }
            break;
        case ReportFormat::text: {
            std::ostringstream os;
            write_text(os, r);
            write_file(dir / "report.txt", os.str());
            break;
        }
    }
}

inline void emit_all(const ScenarioReport& r, const std::filesystem::path& dir) {
    for (auto f : {ReportFormat::json, ReportFormat::csv, ReportFormat::text}) emit_report(r, f, dir);
}

}  // namespace calderon::harness
