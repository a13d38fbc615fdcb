#pragma once

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "calderon/dnmap.hpp"
#include "calderon/numerics.hpp"
#include "calderon/sturm.hpp"

namespace calderon::harness {

/// 64-bit FNV-1a over raw bytes.
class Fnv1a {
public:
    Fnv1a& bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv1a& add(double v) { return bytes(&v, sizeof v); }
    Fnv1a& add(std::uint64_t v) { return bytes(&v, sizeof v); }
    Fnv1a& add(const std::string& s) { return add(static_cast<std::uint64_t>(s.size())).bytes(s.data(), s.size()); }
    Fnv1a& add(std::span<const double> v) {
        add(static_cast<std::uint64_t>(v.size()));
        return bytes(v.data(), v.size() * sizeof(double));
    }
    std::uint64_t value() const noexcept { return h_; }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
        return buf;
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// JSON-file cache for Dirichlet spectra and DN blocks. An empty directory
/// disables it; CALDERON_CACHE overrides the configured directory.
class Cache {
public:
    explicit Cache(std::string dir = {}) {
        if (const char* env = std::getenv("CALDERON_CACHE"); env && *env) dir = env;
        dir_ = std::move(dir);
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    bool enabled() const noexcept { return !dir_.empty(); }
    const std::string& directory() const noexcept { return dir_; }
    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

    /// Eigenfunctions are stored only for small counts; larger requests bypass the cache.
    DirichletSpectrum dirichlet_spectrum(const GridFunction& q, std::size_t count, std::size_t jobs = 1) {
        constexpr std::size_t kMaxStored = 20;
        if (!enabled() || count > kMaxStored) return calderon::dirichlet_spectrum(q, count, jobs);
        const auto key = base_key("spectrum", q).add(static_cast<std::uint64_t>(count)).hex();
        if (auto j = load(key)) {
            ++hits_;
            DirichletSpectrum s;
            s.alphas = j->at("alphas").get<std::vector<double>>();
            for (const auto& e : j->at("eigenfunctions")) s.eigenfunctions.emplace_back(e.get<std::vector<double>>());
            for (const auto& e : j->at("derivatives")) s.derivatives.emplace_back(e.get<std::vector<double>>());
            return s;
        }
        ++misses_;
        auto s = calderon::dirichlet_spectrum(q, count, jobs);
        nlohmann::json j;
        j["alphas"] = s.alphas;
        j["eigenfunctions"] = nlohmann::json::array();
        j["derivatives"] = nlohmann::json::array();
        for (const auto& e : s.eigenfunctions) j["eigenfunctions"].push_back(to_vector(e));
        for (const auto& e : s.derivatives) j["derivatives"].push_back(to_vector(e));
        store(key, j);
        return s;
    }

    std::vector<DnBlock> blocks(const DnModel& model, const std::vector<double>& mus, std::size_t jobs = 1) {
        if (!enabled()) return model.blocks(mus, jobs);
        auto h = base_key("blocks", model.q_grid());
        h.add(static_cast<std::uint64_t>(model.f().n_dim()));
        for (const auto* g : {&model.f().f(), &model.f().df()}) h.add(g->front()).add(g->back());
        h.add(std::span<const double>(mus));
        const auto key = h.hex();
        if (auto j = load(key)) {
            ++hits_;
            std::vector<DnBlock> out;
            for (const auto& r : *j) {
                DnBlock b;
                b.mu = r.at("mu");
                b.a00 = r.at("a00");
                b.a01 = r.at("a01");
                b.a10 = r.at("a10");
                b.a11 = r.at("a11");
                b.delta = r.at("delta");
                b.m = r.at("M");
                b.n_fn = r.at("N");
                b.cross_consistency = r.at("cross");
                out.push_back(b);
            }
            return out;
        }
        ++misses_;
        auto out = model.blocks(mus, jobs);
        nlohmann::json j = nlohmann::json::array();
        for (const auto& b : out) {
            j.push_back({{"mu", b.mu},   {"a00", b.a00}, {"a01", b.a01}, {"a10", b.a10}, {"a11", b.a11},
                         {"delta", b.delta}, {"M", b.m},  {"N", b.n_fn},  {"cross", b.cross_consistency}});
        }
        store(key, j);
        return out;
    }

private:
    static std::vector<double> to_vector(const GridFunction& g) { return {g.values().begin(), g.values().end()}; }

    static Fnv1a base_key(const std::string& kind, std::span<const double> q) {
        const IntegratorTolerances tol;
        Fnv1a h;
        h.add(kind).add(q).add(tol.rtol).add(tol.atol);
        return h;
    }
    static Fnv1a base_key(const std::string& kind, const GridFunction& q) { return base_key(kind, q.values()); }

    std::filesystem::path path(const std::string& key) const { return std::filesystem::path(dir_) / (key + ".json"); }

    std::optional<nlohmann::json> load(const std::string& key) const {
        std::ifstream in(path(key));
        if (!in) return std::nullopt;
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;  // a torn or foreign file is a miss
        }
    }

    void store(const std::string& key, const nlohmann::json& j) const {
        const auto final_path = path(key);
        auto tmp = final_path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw Error("cache: cannot write " + tmp.string());
            out << j.dump();
        }
        std::filesystem::rename(tmp, final_path);
    }

    std::string dir_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace calderon::harness
