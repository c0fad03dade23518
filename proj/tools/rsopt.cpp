// Batch front end: fit, eval, optimize, report.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 solver failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsopt/rsopt.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kSolverFailure = 3;

struct Options {
    std::string config;
    std::string data;
    std::string model;
    std::string method;
    std::string out;
    std::string format;
    std::vector<std::string> terms;
    std::vector<double> x;
    std::optional<std::uint64_t> seed;
    std::optional<double> confidence;
    bool wide = false;
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw rsopt::DataError("cannot write " + out_path);
    out << text;
}

rsopt::RunConfig config_from(const Options& o) {
    rsopt::RunConfig cfg;
    if (!o.config.empty()) cfg = rsopt::load_run_config(o.config);
    if (!o.data.empty()) cfg.data_path = o.data;
    if (o.wide) cfg.wide = true;
    if (!o.terms.empty()) cfg.terms = o.terms;
    if (o.seed) cfg.solver.seed = *o.seed;
    if (!o.format.empty()) cfg.format = rsopt::parse_format(o.format);
    if (cfg.terms.empty()) throw rsopt::DataError("no model terms given (config \"terms\" or --terms)");
    return cfg;
}

/// Loads --model when given, otherwise fits from the config's data.
rsopt::FittedModel model_from(const Options& o, const rsopt::RunConfig& cfg) {
    if (!o.model.empty()) return rsopt::load_model(o.model);
    return rsopt::cmd_fit(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiresponse surface fitting and stochastic optimization"};
    app.require_subcommand(1);
    Options o;

    auto* fit = app.add_subcommand("fit", "Fit the response surfaces and write the model as JSON");
    fit->add_option("--config", o.config, "Run configuration (JSON)");
    fit->add_option("--data", o.data, "Experiment CSV (overrides the config)");
    fit->add_option("--terms", o.terms, "Model terms, e.g. 1 x1 x2 x1*x2")->delimiter(',');
    fit->add_flag("--wide", o.wide, "CSV uses the one-row-per-run layout");
    fit->add_option("--out", o.out, "Output path (default: standard output)");

    auto* eval = app.add_subcommand("eval", "Evaluate predictions and covariance at a point");
    eval->add_option("--model", o.model, "Fitted model JSON")->required();
    eval->add_option("--x", o.x, "Coded point, comma separated")->delimiter(',')->required()->allow_extra_args(false);

    auto* opt = app.add_subcommand("optimize", "Solve one method from the configuration");
    opt->add_option("--config", o.config, "Run configuration (JSON)")->required();
    opt->add_option("--method", o.method, "Method name or kind, e.g. kataoka-epsilon")->required();
    opt->add_option("--model", o.model, "Use a fitted model instead of refitting the data");
    opt->add_option("--data", o.data, "Experiment CSV (overrides the config)");
    opt->add_flag("--wide", o.wide, "CSV uses the one-row-per-run layout");
    opt->add_option("--seed", o.seed, "Multistart seed");
    opt->add_option("--confidence", o.confidence, "Override the probability level");
    opt->add_option("--format", o.format, "json or md")->check(CLI::IsMember({"json", "md"}));
    opt->add_option("--out", o.out, "Output path (default: standard output)");

    auto* rep = app.add_subcommand("report", "Solve every configured method and print the comparison table");
    rep->add_option("--config", o.config, "Run configuration (JSON)")->required();
    rep->add_option("--model", o.model, "Use a fitted model instead of refitting the data");
    rep->add_option("--data", o.data, "Experiment CSV (overrides the config)");
    rep->add_flag("--wide", o.wide, "CSV uses the one-row-per-run layout");
    rep->add_option("--seed", o.seed, "Multistart seed");
    rep->add_option("--format", o.format, "json or md")->check(CLI::IsMember({"json", "md"}));
    rep->add_option("--out", o.out, "Output path (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*fit) {
            const auto cfg = config_from(o);
            emit(rsopt::model_to_json(rsopt::cmd_fit(cfg)).dump(2) + "\n", o.out);
        } else if (*eval) {
            const auto model = rsopt::load_model(o.model);
            std::cout << rsopt::cmd_eval(model, o.x).dump(2) << '\n';
        } else if (*opt) {
            const auto cfg = config_from(o);
            bool known = false;
            for (const auto& m : cfg.methods) known = known || m.name == o.method;
            for (auto k : rsopt::all_method_kinds) known = known || rsopt::method_name(k) == o.method;
            if (!known) {
                std::cerr << "unknown method '" << o.method << "'\n";
                return kUsage;
            }
            const auto model = model_from(o, cfg);
            rsopt::Report r{model.responses, model.n(), {rsopt::cmd_optimize(model, cfg, o.method, o.confidence)}};
            emit(rsopt::render_report(r, cfg.format), o.out);
        } else if (*rep) {
            const auto cfg = config_from(o);
            const auto model = model_from(o, cfg);
            const auto r = rsopt::cmd_report(model, cfg);
            emit(rsopt::render_report(r, cfg.format), o.out);
            if (r.any_failed()) {
                for (const auto& row : r.rows)
                    if (row.failed) std::cerr << row.name << ": " << row.message << '\n';
                return kSolverFailure;
            }
        }
    } catch (const rsopt::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const rsopt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}
