/**
 * @file model.hpp
 * @brief Designed experiments, polynomial term sets and experimental regions.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rsopt/linalg.hpp"

namespace rsopt {

/// A product of factors; factor indices are sorted, an empty list is the intercept.
struct Monomial {
    std::vector<std::size_t> factors;

    std::size_t degree() const noexcept { return factors.size(); }
    bool is_intercept() const noexcept { return factors.empty(); }

    double evaluate(std::span<const double> x) const {
        double v = 1.0;
        for (std::size_t f : factors) v *= x[f];
        return v;
    }

    /// "1", "x2", "x1^2", "x1*x3" (factor numbering is 1-based).
    std::string name() const {
        if (factors.empty()) return "1";
        if (factors.size() == 2 && factors[0] == factors[1])
            return "x" + std::to_string(factors[0] + 1) + "^2";
        std::string s;
        for (std::size_t k = 0; k < factors.size(); ++k) {
            if (k) s += '*';
            s += "x" + std::to_string(factors[k] + 1);
        }
        return s;
    }

    friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Parses "1", "x1", "x1*x2", "x2^2" or "x2*x2".
inline Monomial parse_monomial(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    if (text == "1") return {};
    auto parse_factor = [&](std::string_view f) -> std::size_t {
        f = trim(f);
        if (f.size() < 2 || f[0] != 'x') throw Error("bad monomial '" + std::string(text) + "'");
        std::size_t idx = 0;
        for (char ch : f.substr(1)) {
            if (ch < '0' || ch > '9') throw Error("bad monomial '" + std::string(text) + "'");
            idx = idx * 10 + static_cast<std::size_t>(ch - '0');
        }
        if (idx == 0) throw Error("factor numbering starts at x1");
        return idx - 1;
    };
    Monomial m;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t star = text.find('*', start);
        std::string_view part = text.substr(start, star == std::string_view::npos ? text.npos : star - start);
        const std::size_t caret = part.find('^');
        if (caret != std::string_view::npos) {
            const std::string_view power = trim(part.substr(caret + 1));
            if (power != "2") throw Error("only squares are supported in '" + std::string(text) + "'");
            const std::size_t f = parse_factor(part.substr(0, caret));
            m.factors.push_back(f);
            m.factors.push_back(f);
        } else {
            m.factors.push_back(parse_factor(part));
        }
        if (star == std::string_view::npos) break;
        start = star + 1;
    }
    std::sort(m.factors.begin(), m.factors.end());
    return m;
}

/// Ordered list of model monomials over n factors.
class TermSpec {
public:
    TermSpec(std::size_t n, std::vector<Monomial> terms) : n_(n), terms_(std::move(terms)) {
        if (terms_.empty() || !terms_.front().is_intercept())
            throw Error("first term must be the intercept");
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            if (terms_[i].degree() > 2) throw Error("term degree above 2: " + terms_[i].name());
            for (std::size_t f : terms_[i].factors)
                if (f >= n_) throw Error("term " + terms_[i].name() + " uses a factor beyond n");
            for (std::size_t j = 0; j < i; ++j)
                if (terms_[j] == terms_[i]) throw Error("duplicate term " + terms_[i].name());
        }
    }

    static TermSpec from_names(std::size_t n, std::span<const std::string> names) {
        std::vector<Monomial> terms;
        terms.reserve(names.size());
        for (const auto& s : names) terms.push_back(parse_monomial(s));
        return TermSpec(n, std::move(terms));
    }

    /// Intercept, linears, squares, then i<j cross products.
    static TermSpec full_second_order(std::size_t n) {
        std::vector<Monomial> terms{Monomial{}};
        for (std::size_t i = 0; i < n; ++i) terms.push_back({{i}});
        for (std::size_t i = 0; i < n; ++i) terms.push_back({{i, i}});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) terms.push_back({{i, j}});
        return TermSpec(n, std::move(terms));
    }

    /// Intercept, linears and i<j cross products (no pure quadratics).
    static TermSpec linear_with_interactions(std::size_t n) {
        std::vector<Monomial> terms{Monomial{}};
        for (std::size_t i = 0; i < n; ++i) terms.push_back({{i}});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) terms.push_back({{i, j}});
        return TermSpec(n, std::move(terms));
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t p() const noexcept { return terms_.size(); }
    const std::vector<Monomial>& terms() const noexcept { return terms_; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& t : terms_) out.push_back(t.name());
        return out;
    }

    friend bool operator==(const TermSpec&, const TermSpec&) = default;

private:
    std::size_t n_;
    std::vector<Monomial> terms_;
};

/// z(x): the monomials of `terms` evaluated at x, in term order.
inline Vector evaluate_basis(std::span<const double> x, const TermSpec& terms) {
    if (x.size() != terms.n())
        throw Error("point has " + std::to_string(x.size()) + " coordinates, model expects " +
                    std::to_string(terms.n()));
    Vector z(terms.p());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = terms.terms()[j].evaluate(x);
    return z;
}

struct Hypercube {
    Vector lower;
    Vector upper;
};

struct Hypersphere {
    std::size_t n;
    double radius;
};

/// Closed experimental region: a box or a ball centred on the origin.
class Region {
public:
    static Region hypercube(Vector lower, Vector upper) {
        if (lower.size() != upper.size() || lower.empty()) throw Error("hypercube bounds mismatch");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i])) throw Error("hypercube needs lower < upper");
        return Region(Hypercube{std::move(lower), std::move(upper)});
    }
    static Region cube(std::size_t n, double lo = -1.0, double hi = 1.0) {
        return hypercube(Vector(n, lo), Vector(n, hi));
    }
    static Region hypersphere(std::size_t n, double radius) {
        if (!(radius > 0.0) || n == 0) throw Error("hypersphere needs a positive radius");
        return Region(Hypersphere{n, radius});
    }

    std::size_t dimension() const {
        if (const auto* b = std::get_if<Hypercube>(&shape_)) return b->lower.size();
        return std::get<Hypersphere>(shape_).n;
    }
    bool is_box() const noexcept { return std::holds_alternative<Hypercube>(shape_); }
    const Hypercube* box() const noexcept { return std::get_if<Hypercube>(&shape_); }
    const Hypersphere* ball() const noexcept { return std::get_if<Hypersphere>(&shape_); }

    /// Bounding box; equal to the region itself for a hypercube.
    Hypercube bounds() const {
        if (const auto* b = box()) return *b;
        const auto& s = std::get<Hypersphere>(shape_);
        return {Vector(s.n, -s.radius), Vector(s.n, s.radius)};
    }

    bool contains(std::span<const double> x, double tol = 0.0) const {
        if (x.size() != dimension()) throw Error("region dimension mismatch");
        if (const auto* b = box()) {
            for (std::size_t i = 0; i < x.size(); ++i)
                if (x[i] < b->lower[i] - tol || x[i] > b->upper[i] + tol) return false;
            return true;
        }
        const double c = std::get<Hypersphere>(shape_).radius;
        return dot(x, x) <= c * c + tol;
    }

    /// Nearest point of the region (clip for a box, radial shrink for a ball).
    Vector project(std::span<const double> x) const {
        Vector y(x.begin(), x.end());
        if (const auto* b = box()) {
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], b->lower[i], b->upper[i]);
            return y;
        }
        const double c = std::get<Hypersphere>(shape_).radius;
        const double norm = std::sqrt(dot(y, y));
        if (norm > c)
            for (double& v : y) v *= c / norm;
        return y;
    }

private:
    explicit Region(std::variant<Hypercube, Hypersphere> s) : shape_(std::move(s)) {}
    std::variant<Hypercube, Hypersphere> shape_;
};

inline bool region_contains(const Region& region, std::span<const double> x) {
    return region.contains(x);
}

/// One design point with its replicate observations, y[response][replicate].
struct Run {
    std::string id;
    Vector x;
    std::vector<Vector> y;

    std::size_t replicates() const noexcept { return y.empty() ? 0 : y.front().size(); }
};

/// Replicated multiresponse experiment.
class ExperimentData {
public:
    ExperimentData(std::size_t n, std::vector<std::string> responses, std::vector<Run> runs)
        : n_(n), responses_(std::move(responses)), runs_(std::move(runs)) {
        if (responses_.empty()) throw Error("experiment has no responses");
        if (runs_.empty()) throw Error("no data rows");
        for (const auto& run : runs_) {
            if (run.x.size() != n_) throw Error("run " + run.id + " has the wrong number of factors");
            if (run.y.size() != responses_.size())
                throw Error("run " + run.id + " does not report every response");
            for (std::size_t k = 0; k < run.y.size(); ++k) {
                if (run.y[k].empty())
                    throw Error("run " + run.id + " has zero replicates for " + responses_[k]);
                if (run.y[k].size() != run.y.front().size())
                    throw Error("run " + run.id + " has unequal replicate counts across responses");
            }
        }
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t r() const noexcept { return responses_.size(); }
    const std::vector<std::string>& responses() const noexcept { return responses_; }
    const std::vector<Run>& runs() const noexcept { return runs_; }

    /// N, the total replicate count.
    std::size_t observations() const noexcept {
        std::size_t total = 0;
        for (const auto& run : runs_) total += run.replicates();
        return total;
    }

    /// Throws if any design point lies outside `region`.
    void check_within(const Region& region) const {
        for (const auto& run : runs_)
            if (!region.contains(run.x, 1e-12)) throw Error("run " + run.id + " lies outside the region");
    }

private:
    std::size_t n_;
    std::vector<std::string> responses_;
    std::vector<Run> runs_;
};

struct DesignMatrices {
    Matrix x;  ///< N x p
    Matrix y;  ///< N x r, same row order
};

/// Expands every replicate into its own row.
inline DesignMatrices build_design_matrix(const ExperimentData& data, const TermSpec& terms) {
    if (terms.n() != data.n()) throw Error("term set and data disagree on the number of factors");
    const std::size_t rows = data.observations();
    if (terms.p() > rows) throw Error("underdetermined design");
    DesignMatrices out{Matrix(rows, terms.p()), Matrix(rows, data.r())};
    std::size_t row = 0;
    for (const auto& run : data.runs()) {
        const Vector z = evaluate_basis(run.x, terms);
        for (std::size_t rep = 0; rep < run.replicates(); ++rep, ++row) {
            std::copy(z.begin(), z.end(), out.x.row(row).begin());
            for (std::size_t k = 0; k < data.r(); ++k) out.y(row, k) = run.y[k][rep];
        }
    }
    return out;
}

}  // namespace rsopt
