/**
 * @file cli.hpp
 * @brief Run configuration, report assembly and the batch commands behind the CLI.
 *
 * A run configuration is one JSON document:
 *
 *     {
 *       "data": "experiment_wide.csv", "wide": true,
 *       "responses": ["Y1", "Y2"],
 *       "terms": ["1", "x1", "x2", "x3", "x1*x2", "x1*x3", "x2*x3"],
 *       "region": {"type": "hypercube", "lower": [-1,-1,-1], "upper": [1,1,1]},
 *       "solver": {"resolution": 0.01, "seed": 7, "starts": 16, ...},
 *       "methods": [{"name": "V-model", "method": "v-model", "variance_scale": 32}, ...],
 *       "fixed_points": [{"name": "Reference", "x": [1, 1, -1]}],
 *       "format": "md"
 *     }
 *
 * Relative paths resolve against the directory holding the config file.
 */
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsopt/fit.hpp"
#include "rsopt/io.hpp"
#include "rsopt/model.hpp"
#include "rsopt/programs.hpp"
#include "rsopt/solve.hpp"

namespace rsopt {

/// A method that failed to produce a feasible optimum.
class SolverError : public Error {
public:
    using Error::Error;
};

enum class OutputFormat { json, markdown };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "json") return OutputFormat::json;
    if (s == "md" || s == "markdown") return OutputFormat::markdown;
    throw DataError("unknown output format '" + s + "'");
}

struct MethodSpec {
    std::string name;
    MethodKind kind;
    MethodConfig config;
};

struct FixedPoint {
    std::string name;
    Vector x;
};

struct RunConfig {
    std::string data_path;
    bool wide = false;
    std::vector<std::string> responses;
    std::vector<std::string> terms;
    std::optional<Region> region;
    std::vector<MethodSpec> methods;
    std::vector<FixedPoint> fixed_points;
    SolverSettings solver;
    OutputFormat format = OutputFormat::markdown;
};

namespace detail {

inline const nlohmann::json* find_key(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

template <class T>
T required(const nlohmann::json& j, const char* key, const std::string& where) {
    const auto* v = find_key(j, key);
    if (!v) throw DataError(where + ": missing \"" + key + "\"");
    return v->get<T>();
}

inline Region parse_region(const nlohmann::json& j, std::size_t n) {
    const auto type = required<std::string>(j, "type", "region");
    Region region = [&] {
        if (type == "hypercube") return Region::hypercube(required<Vector>(j, "lower", "region"),
                                                          required<Vector>(j, "upper", "region"));
        if (type == "hypersphere") return Region::hypersphere(n, required<double>(j, "radius", "region"));
        throw DataError("region: unknown type '" + type + "'");
    }();
    if (region.dimension() != n) throw DataError("region dimension differs from the term set");
    return region;
}

inline MethodSpec parse_method(const nlohmann::json& j, std::size_t index) {
    const std::string where = "methods[" + std::to_string(index) + "]";
    MethodSpec m{"", parse_method_kind(required<std::string>(j, "method", where)), {}};
    m.name = find_key(j, "name") ? j["name"].get<std::string>() : std::string(method_name(m.kind));
    MethodConfig& c = m.config;
    const auto kind = m.kind;
    auto need = [&](const char* key, bool needed) {
        const auto* v = find_key(j, key);
        if (!v && needed) throw DataError(where + " (" + m.name + "): missing \"" + key + "\"");
        return v;
    };
    using K = MethodKind;
    const bool uses_tau = kind == K::modified_e_epsilon || kind == K::p_model_weighting || kind == K::p_model_epsilon ||
                          kind == K::kataoka_epsilon || kind == K::goal_programming;
    const bool uses_w = kind == K::mean_weighting || kind == K::modified_e_weighting ||
                        kind == K::p_model_weighting || kind == K::kataoka_weighting || kind == K::goal_programming;
    const bool uses_conf = kind == K::kataoka_weighting || kind == K::kataoka_epsilon || kind == K::goal_programming;
    const bool uses_primary = kind == K::p_model_epsilon || kind == K::kataoka_epsilon;
    if (const auto* v = need("tau", uses_tau)) c.tau = v->get<Vector>();
    if (const auto* v = need("w", uses_w)) c.w = v->get<Vector>();
    if (const auto* v = need("confidence", uses_conf)) c.confidence = v->get<double>();
    if (const auto* v = need("r1", kind == K::modified_e_weighting)) c.r1 = v->get<double>();
    if (const auto* v = need("r2", kind == K::modified_e_weighting)) c.r2 = v->get<double>();
    if (const auto* v = need("variance_scale", false)) c.variance_scale = v->get<double>();
    if (const auto* v = need("primary_index", uses_primary)) {
        const auto k = v->get<std::size_t>();
        if (k == 0) throw DataError(where + ": primary_index counts responses from 1");
        c.primary_index = k - 1;
    }
    if (const auto* v = need("epsilon", kind == K::p_model_epsilon)) {
        for (const auto& e : *v) c.epsilon.push_back(e.is_null() ? 0.0 : e.get<double>());
    }
    if (const auto* v = need("epsilon_inequality", false)) c.epsilon_inequality = v->get<bool>();
    return m;
}

inline SolverSettings parse_solver(const nlohmann::json& j) {
    SolverSettings s;
    if (const auto* v = find_key(j, "resolution")) s.resolution = v->get<double>();
    if (const auto* v = find_key(j, "coarse_resolution")) s.coarse_resolution = v->get<double>();
    if (const auto* v = find_key(j, "tol")) s.tol = v->get<double>();
    if (const auto* v = find_key(j, "max_evaluations")) s.max_evaluations = v->get<std::size_t>();
    if (const auto* v = find_key(j, "penalty_schedule")) s.penalty_schedule = v->get<std::vector<double>>();
    if (const auto* v = find_key(j, "feasibility_tol")) s.feasibility_tol = v->get<double>();
    if (const auto* v = find_key(j, "seed")) s.seed = v->get<std::uint64_t>();
    if (const auto* v = find_key(j, "starts")) s.starts = v->get<std::size_t>();
    if (const auto* v = find_key(j, "threads")) s.threads = v->get<unsigned>();
    if (s.penalty_schedule.empty()) throw DataError("solver: empty penalty_schedule");
    return s;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    try {
        RunConfig cfg;
        if (const auto* v = detail::find_key(j, "data")) {
            std::filesystem::path p = v->get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            cfg.data_path = p.string();
        }
        if (const auto* v = detail::find_key(j, "wide")) cfg.wide = v->get<bool>();
        if (const auto* v = detail::find_key(j, "responses")) cfg.responses = v->get<std::vector<std::string>>();
        cfg.terms = detail::required<std::vector<std::string>>(j, "terms", "config");
        std::size_t n = 0;
        for (const auto& t : cfg.terms)
            for (std::size_t f : parse_monomial(t).factors) n = std::max(n, f + 1);
        if (const auto* v = detail::find_key(j, "factors")) n = v->get<std::size_t>();
        if (const auto* v = detail::find_key(j, "region")) cfg.region = detail::parse_region(*v, n);
        if (const auto* v = detail::find_key(j, "solver")) cfg.solver = detail::parse_solver(*v);
        if (const auto* v = detail::find_key(j, "methods"))
            for (std::size_t i = 0; i < v->size(); ++i) cfg.methods.push_back(detail::parse_method((*v)[i], i));
        if (const auto* v = detail::find_key(j, "fixed_points"))
            for (const auto& fp : *v)
                cfg.fixed_points.push_back({detail::required<std::string>(fp, "name", "fixed_points"),
                                            detail::required<Vector>(fp, "x", "fixed_points")});
        if (const auto* v = detail::find_key(j, "format")) cfg.format = parse_format(v->get<std::string>());
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    } catch (const DataError&) {
        throw;
    } catch (const Error& e) {
        throw DataError(std::string("config: ") + e.what());
    }
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return parse_run_config(j, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Report

struct ReportRow {
    std::string name;
    std::string method;  ///< method kind name, or "fixed" for literature points
    bool fixed = false;
    bool failed = false;
    Vector x;
    std::optional<double> f;
    Vector yhat;
    Matrix cov;
    Vector residuals;
    bool converged = false;
    std::size_t evaluations = 0;
    std::string message;
};

struct Report {
    std::vector<std::string> responses;
    std::size_t n = 0;
    std::vector<ReportRow> rows;

    bool any_failed() const {
        return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.failed; });
    }
};

/// Fills the prediction and covariance columns from the model at row.x.
inline void evaluate_row(const FittedModel& model, ReportRow& row) {
    row.yhat = predict(model, row.x);
    row.cov = covariance_at(model, row.x);
}

inline ReportRow solve_method(const FittedModel& model, const Region& region, const MethodSpec& spec,
                              const SolverSettings& settings) {
    ReportRow row;
    row.name = spec.name;
    row.method = std::string(method_name(spec.kind));
    try {
        const ScalarProgram program = make_program(spec.kind, model, spec.config, region);
        const SolveResult res = multistart(program, settings.starts, settings.seed, settings);
        row.x = res.x_star;
        row.f = res.f_star;
        row.residuals = res.constraint_residuals;
        row.converged = res.converged;
        row.evaluations = res.evaluations;
        row.message = res.message;
        row.failed = !res.converged;
        evaluate_row(model, row);
    } catch (const Error& e) {
        row.failed = true;
        row.message = e.what();
    }
    return row;
}

inline Report build_report(const FittedModel& model, const RunConfig& cfg) {
    if (!cfg.region) throw DataError("config: missing \"region\"");
    Report rep{model.responses, model.n(), {}};
    for (const auto& fp : cfg.fixed_points) {
        ReportRow row;
        row.name = fp.name;
        row.method = "fixed";
        row.fixed = true;
        if (fp.x.size() != model.n()) {
            row.failed = true;
            row.message = "fixed point has the wrong dimension";
        } else {
            row.x = fp.x;
            row.converged = true;
            evaluate_row(model, row);
        }
        rep.rows.push_back(std::move(row));
    }
    std::vector<std::future<ReportRow>> tasks;
    for (const auto& m : cfg.methods)
        tasks.push_back(std::async(std::launch::async,
                                   [&model, &cfg, &m] { return solve_method(model, *cfg.region, m, cfg.solver); }));
    for (auto& t : tasks) rep.rows.push_back(t.get());
    return rep;
}

inline nlohmann::json row_to_json(const ReportRow& row) {
    nlohmann::json j{{"name", row.name}, {"method", row.method}, {"fixed", row.fixed}, {"failed", row.failed}};
    j["x"] = row.x;
    j["F"] = row.f ? nlohmann::json(*row.f) : nlohmann::json(nullptr);
    j["yhat"] = row.yhat;
    nlohmann::json var = nlohmann::json::array(), cov = nlohmann::json::array();
    for (std::size_t a = 0; a < row.cov.rows(); ++a) {
        var.push_back(row.cov(a, a));
        for (std::size_t b = a + 1; b < row.cov.cols(); ++b) cov.push_back(row.cov(a, b));
    }
    j["var"] = var;
    j["cov"] = cov;
    j["constraint_residuals"] = row.residuals;
    j["converged"] = row.converged;
    j["evaluations"] = row.evaluations;
    if (!row.message.empty()) j["message"] = row.message;
    return j;
}

inline nlohmann::json report_to_json(const Report& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) rows.push_back(row_to_json(r));
    return {{"responses", rep.responses}, {"rows", rows}};
}

namespace detail {

inline std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    return s == "-0.000" ? "0.000" : s;
}

}  // namespace detail

/// Markdown table with the column order x, F(x), predictions, variances, covariances.
inline std::string report_to_markdown(const Report& rep) {
    std::ostringstream out;
    const auto& resp = rep.responses;
    out << "| Method |";
    for (std::size_t i = 0; i < rep.n; ++i) out << " x" << i + 1 << " |";
    out << " F(x) |";
    for (const auto& r : resp) out << ' ' << r << "(x) |";
    for (const auto& r : resp) out << " Var(" << r << ") |";
    for (std::size_t a = 0; a < resp.size(); ++a)
        for (std::size_t b = a + 1; b < resp.size(); ++b) out << " Cov(" << resp[a] << ',' << resp[b] << ") |";
    out << " Status |\n|---|";
    const std::size_t cols = rep.n + 1 + 2 * resp.size() + resp.size() * (resp.size() - 1) / 2 + 1;
    for (std::size_t c = 0; c < cols; ++c) out << "---:|";
    out << '\n';
    for (const auto& row : rep.rows) {
        out << "| " << row.name << " |";
        if (row.yhat.empty()) {
            for (std::size_t c = 0; c + 1 < cols; ++c) out << " -- |";
        } else {
            for (double v : row.x) out << ' ' << detail::fixed3(v) << " |";
            out << ' ' << (row.f ? detail::fixed3(*row.f) : std::string("--")) << " |";
            for (double v : row.yhat) out << ' ' << detail::fixed3(v) << " |";
            for (std::size_t a = 0; a < resp.size(); ++a) out << ' ' << detail::fixed3(row.cov(a, a)) << " |";
            for (std::size_t a = 0; a < resp.size(); ++a)
                for (std::size_t b = a + 1; b < resp.size(); ++b) out << ' ' << detail::fixed3(row.cov(a, b)) << " |";
        }
        out << ' ' << (row.failed ? "failed" : row.fixed ? "fixed" : "ok") << " |\n";
    }
    return out.str();
}

inline std::string render_report(const Report& rep, OutputFormat format) {
    return format == OutputFormat::json ? report_to_json(rep).dump(2) + "\n" : report_to_markdown(rep);
}

// ---------------------------------------------------------------------------
// Commands

inline FittedModel cmd_fit(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw DataError("no data file given");
    const ExperimentData data = ingest_csv_file(cfg.data_path, cfg.wide, cfg.responses);
    if (cfg.region) data.check_within(*cfg.region);
    try {
        const TermSpec terms = TermSpec::from_names(data.n(), cfg.terms);
        return fit_ols(data, terms);
    } catch (const DataError&) {
        throw;
    } catch (const Error& e) {
        throw DataError(e.what());
    }
}

/// {yhat, q, cov} at x as a JSON document.
inline nlohmann::json cmd_eval(const FittedModel& model, std::span<const double> x) {
    if (x.size() != model.n())
        throw DataError("point has " + std::to_string(x.size()) + " coordinates, model expects " +
                        std::to_string(model.n()));
    const Matrix cov = covariance_at(model, x);
    return {{"x", Vector(x.begin(), x.end())},
            {"yhat", predict(model, x)},
            {"q", unit_variance(model, x)},
            {"cov", detail::matrix_to_json(cov)}};
}

/// Solves the method whose name or kind matches `method`; throws SolverError on failure.
inline ReportRow cmd_optimize(const FittedModel& model, const RunConfig& cfg, const std::string& method,
                              std::optional<double> confidence = std::nullopt) {
    if (!cfg.region) throw DataError("config: missing \"region\"");
    const MethodSpec* found = nullptr;
    for (const auto& m : cfg.methods)
        if (m.name == method) found = &m;
    if (!found)
        for (const auto& m : cfg.methods)
            if (method_name(m.kind) == method) {
                found = &m;
                break;
            }
    MethodSpec spec;
    if (found) {
        spec = *found;
    } else {
        spec = {method, parse_method_kind(method), {}};
    }
    if (confidence) spec.config.confidence = *confidence;
    try {
        (void)make_program(spec.kind, model, spec.config, *cfg.region);
    } catch (const Error& e) {
        throw DataError(spec.name + ": " + e.what());
    }
    ReportRow row = solve_method(model, *cfg.region, spec, cfg.solver);
    if (row.failed) throw SolverError(row.name + ": " + row.message);
    return row;
}

inline Report cmd_report(const FittedModel& model, const RunConfig& cfg) { return build_report(model, cfg); }

}  // namespace rsopt
