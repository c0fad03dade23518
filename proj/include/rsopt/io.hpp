/**
 * @file io.hpp
 * @brief Experiment CSV ingestion and fitted-model persistence.
 *
 * Long format, one observation per line:
 *
 *     run_id,x1,...,xn,response,replicate,value
 *
 * Wide format, one design run per line with replicates as columns:
 *
 *     ID,x1,...,xn,Y1_1,...,Y1_m,Y2_1,...,Y2_m
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rsopt/fit.hpp"
#include "rsopt/model.hpp"

namespace rsopt {

/// Malformed input files, configs or experiment data.
class DataError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == line.npos ? line.npos : comma - start)));
        if (comma == line.npos) break;
        start = comma + 1;
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

inline CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (t.header.empty()) {
            if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw DataError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(lineno);
    }
    if (t.header.empty()) throw DataError(source + ": empty file");
    if (t.rows.empty()) throw DataError(source + ": no data rows");
    return t;
}

inline double parse_number(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw DataError(where + ": non-numeric value '" + s + "'");
    return v;
}

/// Column indices of x1..xn, which must appear as a contiguous numbering.
inline std::vector<std::size_t> factor_columns(const std::vector<std::string>& header, const std::string& source) {
    std::map<std::size_t, std::size_t> by_number;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& h = header[c];
        if (h.size() < 2 || h[0] != 'x' ||
            !std::all_of(h.begin() + 1, h.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
            continue;
        const std::size_t num = std::stoul(h.substr(1));
        if (!by_number.emplace(num, c).second) throw DataError(source + ": duplicate column " + h);
    }
    if (by_number.empty()) throw DataError(source + ": missing column x1");
    std::vector<std::size_t> cols;
    std::size_t expect = 1;
    for (const auto& [num, col] : by_number) {
        if (num != expect) throw DataError(source + ": missing column x" + std::to_string(expect));
        cols.push_back(col);
        ++expect;
    }
    return cols;
}

inline std::size_t require_column(const std::vector<std::string>& header, std::string_view name,
                                  const std::string& source) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": missing column " + std::string(name));
    return static_cast<std::size_t>(it - header.begin());
}

struct RunBuilder {
    std::string id;
    Vector x;
    std::map<std::string, std::map<long, double>> obs;  // response -> replicate -> value
};

inline std::vector<std::string> order_responses(std::vector<std::string> seen,
                                                const std::vector<std::string>& override_order,
                                                const std::string& source) {
    if (override_order.empty()) return seen;
    for (const auto& r : override_order)
        if (std::find(seen.begin(), seen.end(), r) == seen.end())
            throw DataError(source + ": response '" + r + "' not present in the data");
    return override_order;
}

inline ExperimentData assemble(std::size_t n, const std::vector<std::string>& responses,
                               const std::vector<RunBuilder>& builders, const std::string& source) {
    std::vector<Run> runs;
    for (const auto& b : builders) {
        Run run{b.id, b.x, {}};
        for (const auto& resp : responses) {
            const auto it = b.obs.find(resp);
            if (it == b.obs.end() || it->second.empty())
                throw DataError(source + ": run " + b.id + " has zero replicates for " + resp);
            Vector vals;
            for (const auto& [rep, v] : it->second) vals.push_back(v);
            run.y.push_back(std::move(vals));
        }
        runs.push_back(std::move(run));
    }
    try {
        return ExperimentData(n, responses, std::move(runs));
    } catch (const DataError&) {
        throw;
    } catch (const Error& e) {
        throw DataError(source + ": " + e.what());
    }
}

}  // namespace detail

/// Parses long-format experiment data.
inline ExperimentData ingest_csv(std::istream& in, const std::string& source = "<csv>",
                                 const std::vector<std::string>& response_order = {}) {
    const auto t = detail::read_csv(in, source);
    const auto xcols = detail::factor_columns(t.header, source);
    const std::size_t c_id = detail::require_column(t.header, "run_id", source);
    const std::size_t c_resp = detail::require_column(t.header, "response", source);
    const std::size_t c_rep = detail::require_column(t.header, "replicate", source);
    const std::size_t c_val = detail::require_column(t.header, "value", source);

    std::vector<detail::RunBuilder> builders;
    std::map<std::string, std::size_t> index;
    std::vector<std::string> seen;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string where = source + ":" + std::to_string(t.line_numbers[i]);
        Vector x;
        for (std::size_t c : xcols) x.push_back(detail::parse_number(row[c], where));
        const std::string& id = row[c_id];
        if (id.empty()) throw DataError(where + ": empty run_id");
        const std::string& resp = row[c_resp];
        if (resp.empty()) throw DataError(where + ": empty response name");
        const double rep_num = detail::parse_number(row[c_rep], where);
        if (rep_num != std::floor(rep_num)) throw DataError(where + ": replicate must be an integer");
        const double value = detail::parse_number(row[c_val], where);

        auto [it, fresh] = index.emplace(id, builders.size());
        if (fresh) builders.push_back({id, x, {}});
        auto& b = builders[it->second];
        if (b.x != x) throw DataError(where + ": run " + id + " changes its factor settings");
        if (std::find(seen.begin(), seen.end(), resp) == seen.end()) seen.push_back(resp);
        if (!b.obs[resp].emplace(static_cast<long>(rep_num), value).second)
            throw DataError(where + ": duplicate observation for run " + id + ", " + resp);
    }
    return detail::assemble(xcols.size(), detail::order_responses(seen, response_order, source), builders, source);
}

/// Parses the one-row-per-run layout with `<response>_<replicate>` columns.
inline ExperimentData ingest_wide_csv(std::istream& in, const std::string& source = "<csv>",
                                      const std::vector<std::string>& response_order = {}) {
    const auto t = detail::read_csv(in, source);
    const auto xcols = detail::factor_columns(t.header, source);
    std::size_t c_id = t.header.size();
    for (std::string_view name : {"ID", "id", "run_id"}) {
        const auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it != t.header.end()) {
            c_id = static_cast<std::size_t>(it - t.header.begin());
            break;
        }
    }
    if (c_id == t.header.size()) throw DataError(source + ": missing column ID");

    struct ObsColumn {
        std::size_t col;
        std::string response;
        long replicate;
    };
    std::vector<ObsColumn> obs_cols;
    std::vector<std::string> seen;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c == c_id || std::find(xcols.begin(), xcols.end(), c) != xcols.end()) continue;
        const auto& h = t.header[c];
        const std::size_t us = h.rfind('_');
        if (us == std::string::npos || us == 0 || us + 1 == h.size())
            throw DataError(source + ": column '" + h + "' is not of the form <response>_<replicate>");
        const std::string resp = h.substr(0, us);
        const double rep = detail::parse_number(h.substr(us + 1), source + ": header");
        obs_cols.push_back({c, resp, static_cast<long>(rep)});
        if (std::find(seen.begin(), seen.end(), resp) == seen.end()) seen.push_back(resp);
    }
    if (obs_cols.empty()) throw DataError(source + ": no response columns");

    std::vector<detail::RunBuilder> builders;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string where = source + ":" + std::to_string(t.line_numbers[i]);
        detail::RunBuilder b{row[c_id], {}, {}};
        for (std::size_t c : xcols) b.x.push_back(detail::parse_number(row[c], where));
        for (const auto& oc : obs_cols) {
            if (row[oc.col].empty()) continue;  // unequal replication
            b.obs[oc.response][oc.replicate] = detail::parse_number(row[oc.col], where);
        }
        builders.push_back(std::move(b));
    }
    return detail::assemble(xcols.size(), detail::order_responses(seen, response_order, source), builders, source);
}

inline ExperimentData ingest_csv_file(const std::string& path, bool wide = false,
                                      const std::vector<std::string>& response_order = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return wide ? ingest_wide_csv(in, path, response_order) : ingest_csv(in, path, response_order);
}

// ---------------------------------------------------------------------------
// Model persistence

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* what) {
    if (!j.is_array() || j.size() != rows) throw DataError(std::string("model field ") + what + " has the wrong shape");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw DataError(std::string("model field ") + what + " has the wrong shape");
        for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

}  // namespace detail

inline nlohmann::json model_to_json(const FittedModel& m) {
    return {
        {"format", "rsopt-model/1"},
        {"n", m.n()},
        {"terms", m.terms.names()},
        {"responses", m.responses},
        {"N", m.n_obs},
        {"p", m.p()},
        {"r", m.r()},
        {"b_hat", detail::matrix_to_json(m.b_hat)},
        {"sigma_hat", detail::matrix_to_json(m.sigma_hat)},
        {"xtx_inv", detail::matrix_to_json(m.xtx_inv)},
    };
}

inline FittedModel model_from_json(const nlohmann::json& j) {
    try {
        const auto n = j.at("n").get<std::size_t>();
        const auto names = j.at("terms").get<std::vector<std::string>>();
        TermSpec terms = TermSpec::from_names(n, names);
        const auto p = j.at("p").get<std::size_t>();
        const auto r = j.at("r").get<std::size_t>();
        if (p != terms.p()) throw DataError("model p does not match its term list");
        auto responses = j.at("responses").get<std::vector<std::string>>();
        if (responses.size() != r) throw DataError("model r does not match its response list");
        FittedModel m{std::move(terms),
                      std::move(responses),
                      detail::matrix_from_json(j.at("b_hat"), p, r, "b_hat"),
                      detail::matrix_from_json(j.at("sigma_hat"), r, r, "sigma_hat"),
                      detail::matrix_from_json(j.at("xtx_inv"), p, p, "xtx_inv"),
                      Matrix{},
                      j.at("N").get<std::size_t>()};
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    } catch (const DataError&) {
        throw;
    } catch (const Error& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
}

inline void save_model(const FittedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << model_to_json(m).dump(2) << '\n';
}

inline FittedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace rsopt
