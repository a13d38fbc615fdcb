#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "calderon/error.hpp"
#include "calderon/grid_function.hpp"

namespace calderon {

/// A function on [0,1] together with its first and second derivatives, all on
/// one grid.
class Profile {
public:
    Profile() = default;

    Profile(GridFunction value, GridFunction first, GridFunction second)
        : value_(std::move(value)), first_(std::move(first)), second_(std::move(second)) {
        value_.require_same_grid(first_);
        value_.require_same_grid(second_);
    }

    /// Derivatives by fourth-order finite differences of the samples.
    static Profile from_samples(GridFunction value) {
        auto d1 = differentiate(value);
        auto d2 = differentiate2(value);
        return Profile(std::move(value), std::move(d1), std::move(d2));
    }

    template <class F, class D1, class D2>
    static Profile from_functions(std::size_t n_points, F&& f, D1&& d1, D2&& d2) {
        return Profile(GridFunction::sample(n_points, f), GridFunction::sample(n_points, d1),
                       GridFunction::sample(n_points, d2));
    }

    static Profile constant(std::size_t n_points, double value) {
        return Profile(GridFunction::constant(n_points, value), GridFunction::constant(n_points, 0.0),
                       GridFunction::constant(n_points, 0.0));
    }

    const GridFunction& value() const noexcept { return value_; }
    const GridFunction& first() const noexcept { return first_; }
    const GridFunction& second() const noexcept { return second_; }
    std::size_t size() const noexcept { return value_.size(); }

    /// sup |first - d/dx value|, with the derivative taken numerically.
    double consistency_error() const { return sup_distance(first_, differentiate(value_)); }

    friend bool operator==(const Profile&, const Profile&) = default;

private:
    GridFunction value_, first_, second_;
};

/// Warping f of the cylinder metric f^4 (dx^2 + g_K) on an n-dimensional manifold.
class WarpingProfile {
public:
    WarpingProfile(Profile f, int n_dim) : f_(std::move(f)), n_dim_(n_dim) {
        if (n_dim_ < 2) throw InvalidInput("WarpingProfile: n_dim must be >= 2");
        if (!(f_.value().min() > 0.0)) throw InvalidInput("WarpingProfile: f must be positive");
    }

    static WarpingProfile flat(std::size_t n_points, int n_dim) {
        return WarpingProfile(Profile::constant(n_points, 1.0), n_dim);
    }

    const Profile& profile() const noexcept { return f_; }
    const GridFunction& f() const noexcept { return f_.value(); }
    const GridFunction& df() const noexcept { return f_.first(); }
    const GridFunction& d2f() const noexcept { return f_.second(); }
    int n_dim() const noexcept { return n_dim_; }
    std::size_t size() const noexcept { return f_.size(); }

    /// q_f = (f^{n-2})'' / f^{n-2}.
    GridFunction q_f() const {
        const double a = n_dim_ - 2.0;
        std::vector<double> q(size());
        for (std::size_t i = 0; i < size(); ++i) {
            const double r1 = df()[i] / f()[i];
            q[i] = a * d2f()[i] / f()[i] + a * (a - 1.0) * r1 * r1;
        }
        return GridFunction(std::move(q));
    }

    friend bool operator==(const WarpingProfile&, const WarpingProfile&) = default;

private:
    Profile f_;
    int n_dim_;
};

/// Conformal factor c(x) > 0; the metric c^4 g.
class ConformalFactor {
public:
    explicit ConformalFactor(Profile c) : c_(std::move(c)) {
        if (!(c_.value().min() > 0.0)) throw InvalidInput("ConformalFactor: c must be positive");
    }

    static ConformalFactor identity(std::size_t n_points) {
        return ConformalFactor(Profile::constant(n_points, 1.0));
    }

    const Profile& profile() const noexcept { return c_; }
    const GridFunction& c() const noexcept { return c_.value(); }
    const GridFunction& dc() const noexcept { return c_.first(); }
    const GridFunction& d2c() const noexcept { return c_.second(); }
    std::size_t size() const noexcept { return c_.size(); }

    /// w = c^{n-2} with derivatives from the chain rule.
    Profile w(int n_dim) const {
        const double a = n_dim - 2.0;
        std::vector<double> w0(size()), w1(size()), w2(size());
        for (std::size_t i = 0; i < size(); ++i) {
            const double cv = c()[i], c1 = dc()[i], c2 = d2c()[i];
            const double p = std::pow(cv, a);
            w0[i] = p;
            w1[i] = a * p * c1 / cv;
            w2[i] = a * p * c2 / cv + a * (a - 1.0) * p * (c1 / cv) * (c1 / cv);
        }
        return Profile(GridFunction(std::move(w0)), GridFunction(std::move(w1)), GridFunction(std::move(w2)));
    }

private:
    Profile c_;
};

/// Q = q_f + (V - lambda) f^4.
inline GridFunction effective_potential(const WarpingProfile& f, const GridFunction& v, double lambda) {
    f.f().require_same_grid(v);
    const auto q = f.q_f();
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f2 = f.f()[i] * f.f()[i];
        out[i] = q[i] + (v[i] - lambda) * f2 * f2;
    }
    return GridFunction(std::move(out));
}

/// Warping of c^4 g, i.e. the product c f with product-rule derivatives.
inline WarpingProfile conformal_rescale(const WarpingProfile& f, const ConformalFactor& c) {
    f.f().require_same_grid(c.c());
    const std::size_t n = f.size();
    std::vector<double> v(n), d1(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double fv = f.f()[i], f1 = f.df()[i], f2 = f.d2f()[i];
        const double cv = c.c()[i], c1 = c.dc()[i], c2 = c.d2c()[i];
        v[i] = cv * fv;
        d1[i] = c1 * fv + cv * f1;
        d2[i] = c2 * fv + 2 * c1 * f1 + cv * f2;
    }
    return WarpingProfile(Profile(GridFunction(std::move(v)), GridFunction(std::move(d1)),
                                  GridFunction(std::move(d2))),
                          f.n_dim());
}

/// c^{-(n-2)} Delta_g c^{n-2} for x-only c, using
/// Delta_g h = f^{-(n+2)} (d^2 - q_f)(f^{n-2} h).
inline GridFunction conformal_laplacian_quotient(const WarpingProfile& f, const ConformalFactor& c) {
    f.f().require_same_grid(c.c());
    const double a = f.n_dim() - 2.0;
    const auto w = c.w(f.n_dim());
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double fv = f.f()[i];
        const double log_f_prime = a * f.df()[i] / fv;  // (f^{n-2})' / f^{n-2}
        const double f4 = fv * fv * fv * fv;
        out[i] = (2 * log_f_prime * w.first()[i] / w.value()[i] + w.second()[i] / w.value()[i]) / f4;
    }
    return GridFunction(std::move(out));
}

/// V_{g,c,lambda} = c^{-(n-2)} Delta_g c^{n-2} + lambda (1 - c^4).
inline GridFunction potential_of_conformal_factor(const WarpingProfile& f, const ConformalFactor& c,
                                                  double lambda) {
    const auto q = conformal_laplacian_quotient(f, c);
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double c2 = c.c()[i] * c.c()[i];
        out[i] = q[i] + lambda * (1.0 - c2 * c2);
    }
    return GridFunction(std::move(out));
}

/// Eigenvalues of -Delta_K with multiplicities.
struct TransverseEntry {
    double mu = 0.0;
    int multiplicity = 1;

    friend bool operator==(const TransverseEntry&, const TransverseEntry&) = default;
};

class TransverseSpectrum {
public:
    TransverseSpectrum(std::string label, std::vector<TransverseEntry> entries)
        : label_(std::move(label)), entries_(std::move(entries)) {
        if (entries_.empty()) throw InvalidInput("transverse spectrum is empty");
        if (entries_.front().mu != 0.0 || entries_.front().multiplicity != 1) {
            throw InvalidInput("transverse spectrum must start with mu=0 of multiplicity 1");
        }
        for (std::size_t k = 0; k < entries_.size(); ++k) {
            const auto& e = entries_[k];
            if (!std::isfinite(e.mu) || e.mu < 0.0 || e.multiplicity < 1) {
                throw InvalidInput("transverse spectrum entry " + std::to_string(k) + " is invalid");
            }
            if (k > 0 && e.mu < entries_[k - 1].mu) {
                throw InvalidInput("transverse spectrum is not sorted at entry " + std::to_string(k));
            }
        }
    }

    const std::string& label() const noexcept { return label_; }
    const std::vector<TransverseEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// The first `count` entries' mu values (all of them when count is 0).
    std::vector<double> mus(std::size_t count = 0) const {
        const std::size_t n = count == 0 ? entries_.size() : std::min(count, entries_.size());
        std::vector<double> out(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = entries_[k].mu;
        return out;
    }

    friend bool operator==(const TransverseSpectrum&, const TransverseSpectrum&) = default;

private:
    std::string label_;
    std::vector<TransverseEntry> entries_;
};

namespace detail {

/// Distinct values m = j_1^2 + ... + j_d^2 with representation counts, smallest first.
inline std::vector<TransverseEntry> lattice_spectrum(int d, std::size_t count) {
    std::int64_t limit = 16;
    while (true) {
        std::vector<std::int64_t> r(static_cast<std::size_t>(limit) + 1, 0);
        r[0] = 1;
        for (int dim = 0; dim < d; ++dim) {
            std::vector<std::int64_t> next(r.size(), 0);
            for (std::int64_t m = 0; m <= limit; ++m) {
                if (r[static_cast<std::size_t>(m)] == 0) continue;
                for (std::int64_t j = 0; m + j * j <= limit; ++j) {
                    next[static_cast<std::size_t>(m + j * j)] += r[static_cast<std::size_t>(m)] * (j == 0 ? 1 : 2);
                }
            }
            r = std::move(next);
        }
        std::vector<TransverseEntry> out;
        for (std::int64_t m = 0; m <= limit && out.size() < count; ++m) {
            if (r[static_cast<std::size_t>(m)] > 0) {
                out.push_back({static_cast<double>(m), static_cast<int>(r[static_cast<std::size_t>(m)])});
            }
        }
        if (out.size() == count) return out;
        limit *= 2;
    }
}

}  // namespace detail

inline TransverseSpectrum circle_spectrum(std::size_t count) {
    std::vector<TransverseEntry> e;
    for (std::size_t j = 0; j < count; ++j) e.push_back({double(j * j), j == 0 ? 1 : 2});
    return TransverseSpectrum("circle", std::move(e));
}

inline TransverseSpectrum torus_spectrum(int d, std::size_t count) {
    if (d < 1) throw InvalidInput("torus dimension must be >= 1");
    return TransverseSpectrum(d == 2 ? "torus2" : "torusD(" + std::to_string(d) + ")",
                              detail::lattice_spectrum(d, count));
}

/// Built-in spectra by label: "circle", "torus2", "torusD(d)".
inline TransverseSpectrum transverse_spectrum(const std::string& label, std::size_t count) {
    if (count == 0 || count > 10000) throw InvalidInput("transverse spectrum count must be in [1, 10000]");
    if (label == "circle") return circle_spectrum(count);
    if (label == "torus2") return torus_spectrum(2, count);
    static const std::regex torus_d(R"(torusD\((\d+)\))");
    std::smatch m;
    if (std::regex_match(label, m, torus_d)) return torus_spectrum(std::stoi(m[1].str()), count);
    throw InvalidInput("unknown transverse spectrum label '" + label + "'");
}

/// A custom spectrum from a JSON array of {"mu": ..., "multiplicity": ...}.
inline TransverseSpectrum custom_spectrum(const nlohmann::json& j) {
    if (!j.is_array()) throw InvalidInput("custom spectrum must be a JSON array");
    std::vector<TransverseEntry> e;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("mu") || !item["mu"].is_number()) {
            throw InvalidInput("custom spectrum entries need a numeric 'mu'");
        }
        const int mult = item.contains("multiplicity") ? item["multiplicity"].get<int>() : 1;
        e.push_back({item["mu"].get<double>(), mult});
    }
    return TransverseSpectrum("custom", std::move(e));
}

inline nlohmann::json to_json(const TransverseSpectrum& s) {
    auto arr = nlohmann::json::array();
    for (const auto& e : s.entries()) arr.push_back({{"mu", e.mu}, {"multiplicity", e.multiplicity}});
    return arr;
}

}  // namespace calderon
