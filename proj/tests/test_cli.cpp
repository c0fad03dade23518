#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fixture.hpp"

using rsopt::testing::data_path;
using nlohmann::json;

namespace {

struct Outcome {
    int code;
    std::string out;
};

Outcome run(const std::string& args) {
    const char* exe = std::getenv("RSOPT_CLI");
    if (!exe) throw std::runtime_error("RSOPT_CLI not set");
    const std::string cmd = std::string(exe) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    std::string out;
    std::array<char, 4096> buf;
    std::size_t got;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string config() { return data_path("run_config.json"); }

std::string temp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

std::string write_config(const std::string& name, const json& patch) {
    std::ifstream in(config());
    json cfg = json::parse(in);
    cfg["data"] = data_path("experiment.csv");
    cfg.merge_patch(patch);
    const auto path = temp(name);
    std::ofstream(path) << cfg.dump();
    return path;
}

}  // namespace

TEST(Cli, FitThenEval) {
    const auto model = temp("rsopt_cli_model.json");
    ASSERT_EQ(run("fit --config " + config() + " --out " + model).code, 0);

    const auto corner = run("eval --model " + model + " --x 1,1,-1");
    ASSERT_EQ(corner.code, 0);
    const json c = json::parse(corner.out);
    EXPECT_NEAR(c["yhat"][0].get<double>(), 104.61, 0.01);
    EXPECT_NEAR(c["yhat"][1].get<double>(), 73.57, 0.01);
    EXPECT_NEAR(c["q"].get<double>(), 7.0 / 32.0, 1e-12);

    const json o = json::parse(run("eval --model " + model + " --x 0,0,0").out);
    EXPECT_NEAR(o["q"].get<double>(), 1.0 / 32.0, 1e-12);
    EXPECT_NEAR(o["cov"][0][1].get<double>(), 3.5465 / 32.0, 1e-4);

    EXPECT_EQ(run("eval --model " + model + " --x 0,0").code, 2);
    std::filesystem::remove(model);
}

TEST(Cli, OptimizeSingleMethods) {
    const auto v = run("optimize --config " + config() + " --method v-model --format json");
    ASSERT_EQ(v.code, 0);
    const json vj = json::parse(v.out);
    ASSERT_EQ(vj["rows"].size(), 1u);
    EXPECT_NEAR(vj["rows"][0]["F"].get<double>(), 1.0, 1e-9);
    for (const auto& xi : vj["rows"][0]["x"]) EXPECT_NEAR(xi.get<double>(), 0.0, 1e-4);

    const auto k = run("optimize --config " + config() + " --method kataoka-epsilon --format json");
    ASSERT_EQ(k.code, 0);
    EXPECT_NEAR(json::parse(k.out)["rows"][0]["F"].get<double>(), 67.296, 0.05);

    const auto g = run("optimize --config " + config() + " --method goal-programming --confidence 0.5 --format json");
    ASSERT_EQ(g.code, 0);
    EXPECT_LT(json::parse(g.out)["rows"][0]["F"].get<double>(), 0.01);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("optimize --config " + config() + " --method no-such-method").code, 1);
    EXPECT_EQ(run("report --config /nonexistent.json").code, 2);
    const auto bad_data = write_config("rsopt_cli_bad.json", {{"data", "/nonexistent.csv"}});
    EXPECT_EQ(run("report --config " + bad_data).code, 2);
    const auto infeasible = write_config(
        "rsopt_cli_infeasible.json",
        {{"fixed_points", json::array()},
         {"methods", {{{"name", "far"}, {"method", "modified-e-epsilon"}, {"tau", {500, 73}}, {"variance_scale", 32}}}}});
    EXPECT_EQ(run("report --config " + infeasible).code, 3);
    EXPECT_EQ(run("optimize --config " + infeasible + " --method far").code, 3);
    std::filesystem::remove(bad_data);
    std::filesystem::remove(infeasible);
}

TEST(Cli, ReportRows) {
    const auto r = run("report --config " + config() + " --format json");
    ASSERT_EQ(r.code, 0);
    const json j = json::parse(r.out);
    ASSERT_EQ(j["rows"].size(), 14u);
    std::size_t fixed = 0;
    for (const auto& row : j["rows"]) fixed += row["fixed"].get<bool>() ? 1 : 0;
    EXPECT_EQ(fixed, 6u);

    const auto md = run("report --config " + config() + " --format md");
    ASSERT_EQ(md.code, 0);
    std::size_t lines = 0;
    for (char ch : md.out) lines += ch == '\n';
    EXPECT_EQ(lines, 16u);
}

TEST(Cli, EmptyMethodList) {
    const auto path = write_config("rsopt_cli_empty.json", {{"methods", json::array()}, {"fixed_points", json::array()}});
    const auto md = run("report --config " + path + " --format md");
    EXPECT_EQ(md.code, 0);
    std::size_t lines = 0;
    for (char ch : md.out) lines += ch == '\n';
    EXPECT_EQ(lines, 2u);
    std::filesystem::remove(path);
}

TEST(Cli, JsonIsByteDeterministic) {
    const auto a = run("report --config " + config() + " --format json --seed 7");
    const auto b = run("report --config " + config() + " --format json --seed 7");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}
