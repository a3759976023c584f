/*
 Copyright 2026 The smpc_lab Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "smpc_lab/runner.hpp"
#include "smpc_lab/scenario.hpp"
#include "test_helpers.hpp"

namespace smpc_lab {
namespace {

namespace fs = std::filesystem;
using testing::code_of;

struct CommandResult {
    int status = -1;
    std::string out;
};

CommandResult run_cli(const std::string& args) {
    const std::string cmd = std::string(SMPC_LAB_CLI) + " " + args + " 2>/dev/null";
    CommandResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("smpc_lab_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string scenario_file(const std::string& name) { return std::string(SMPC_LAB_SCENARIO_DIR) + "/" + name; }

const char* kSmall = R"({
  "name": "small",
  "model": {"type": "example_2_1"},
  "smpc": {"T": 1.0, "tau": 0.5, "h": 0.01, "x0": [1.0], "t_end": 1.0, "n_paths": 64, "seed": 2},
  "mode": "rhc",
  "analyses": [{"type": "mean_square"}]
})";

GTEST_TEST(ScenarioTest, BundledExampleParses) {
    const Scenario s = parse_scenario(scenario_file("example_2_1.json"));
    EXPECT_EQ(s.name, "example_2_1");
    EXPECT_EQ(s.mode, ControllerKind::Rhc);
    EXPECT_FALSE(s.G.has_value());
    EXPECT_DOUBLE_EQ(s.smpc.T, 1.5);
    EXPECT_EQ(s.smpc.n_paths, 10000u);
    EXPECT_EQ(s.analyses.size(), 3u);
    EXPECT_EQ(read_file(scenario_file("example_2_1.json")), example_2_1_scenario_text());
}

GTEST_TEST(ScenarioTest, AllBundledScenariosParse) {
    for (const auto& entry : fs::directory_iterator(SMPC_LAB_SCENARIO_DIR)) {
        if (entry.path().extension() == ".json") {
            EXPECT_NO_THROW(parse_scenario(entry.path().string())) << entry.path();
        }
    }
}

GTEST_TEST(ScenarioTest, EmptyDocumentIsParseError) {
    EXPECT_EQ(code_of([] { parse_scenario_text(""); }), ErrorCode::ParseError);
    try {
        parse_scenario_text("{\n  \"name\": \"x\",\n  oops\n}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

GTEST_TEST(ScenarioTest, TauOffGridNamesField) {
    std::string text = kSmall;
    text.replace(text.find("\"tau\": 0.5"), 10, "\"tau\": 0.505");
    text.replace(text.find("\"h\": 0.01"), 9, "\"h\": 0.02");
    try {
        parse_scenario_text(text);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ValidationError);
        EXPECT_NE(std::string(e.what()).find("tau"), std::string::npos) << e.what();
    }
}

GTEST_TEST(ScenarioTest, UnknownKeysRejected) {
    std::string text = kSmall;
    text.replace(text.find("\"mode\""), 6, "\"moed\"");
    EXPECT_EQ(code_of([&] { parse_scenario_text(text); }), ErrorCode::UnknownKey);
    text = kSmall;
    text.replace(text.find("\"seed\""), 6, "\"sead\"");
    EXPECT_EQ(code_of([&] { parse_scenario_text(text); }), ErrorCode::UnknownKey);
}

GTEST_TEST(ScenarioTest, ValidationErrors) {
    std::string text = kSmall;
    text.replace(text.find("\"rhc\""), 5, "\"pid\"");
    EXPECT_EQ(code_of([&] { parse_scenario_text(text); }), ErrorCode::ValidationError);
    text = kSmall;
    text.replace(text.find("\"T\": 1.0"), 8, "\"T\": 0.2");
    EXPECT_EQ(code_of([&] { parse_scenario_text(text); }), ErrorCode::ValidationError);
    text = kSmall;
    text.replace(text.find("\"example_2_1\""), 13, "\"example_9\"");
    EXPECT_EQ(code_of([&] { parse_scenario_text(text); }), ErrorCode::ValidationError);
}

GTEST_TEST(ScenarioTest, LinearAndPolynomialModels) {
    const Scenario lin = parse_scenario(scenario_file("linear_gap.json"));
    EXPECT_EQ(lin.model_type, "linear");
    ASSERT_TRUE(lin.G.has_value());
    EXPECT_DOUBLE_EQ((*lin.G)(0, 0), 2.0);
    const Scenario poly = parse_scenario(scenario_file("polynomial_local.json"));
    EXPECT_DOUBLE_EQ(poly.model.linearization.A(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(poly.model.linearization.B(0, 0), -1.0);
    EXPECT_EQ(poly.model.growth_order, 2);
}

GTEST_TEST(ScenarioTest, Overrides) {
    Scenario s = parse_scenario_text(kSmall);
    EXPECT_EQ(s.output_dir, "out/small");
    ScenarioOverrides o;
    o.seed = 11;
    o.paths = 5;
    o.h = 0.005;
    o.out = "elsewhere";
    apply_overrides(s, o);
    EXPECT_EQ(s.smpc.seed, 11u);
    EXPECT_EQ(s.smpc.n_paths, 5u);
    EXPECT_DOUBLE_EQ(s.smpc.h, 0.005);
    EXPECT_EQ(s.output_dir, "elsewhere");
    ScenarioOverrides bad;
    bad.h = 0.3;
    EXPECT_EQ(code_of([&] { apply_overrides(s, bad); }), ErrorCode::ValidationError);
}

GTEST_TEST(RunnerTest, WritesArtifactsWithSchema) {
    Scenario s = parse_scenario_text(kSmall);
    const fs::path dir = scratch_dir("run");
    s.output_dir = dir.string();
    std::ostringstream log;
    const RunOutcome r = run_scenario(s, log);
    EXPECT_EQ(r.exit_code, kExitOk) << log.str();
    for (const char* f : {"mean_square.csv", "riccati_convergence.csv", "stability_report.txt", "summary.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    std::istringstream ms(read_file(dir / "mean_square.csv"));
    std::string line;
    std::getline(ms, line);
    EXPECT_EQ(line, "t,ms_estimate,ms_stderr,bound,n_effective");
    std::size_t rows = 0;
    while (std::getline(ms, line)) ++rows;
    EXPECT_EQ(rows, 101u);
    std::istringstream rc(read_file(dir / "riccati_convergence.csv"));
    std::getline(rc, line);
    EXPECT_EQ(line, "t,sigma_gap,k1_bound");
}

GTEST_TEST(RunnerTest, ExitCodes) {
    EXPECT_EQ(exit_code_for(Error(ErrorCode::ParseError, "")), kExitUsage);
    EXPECT_EQ(exit_code_for(Error(ErrorCode::UnknownKey, "")), kExitUsage);
    EXPECT_EQ(exit_code_for(Error(ErrorCode::ValidationError, "")), kExitUsage);
    EXPECT_EQ(exit_code_for(Error(ErrorCode::NoConvergence, "")), kExitNumerical);
    EXPECT_EQ(exit_code_for(Error(ErrorCode::SingularR, "")), kExitNumerical);
    EXPECT_EQ(format_full(0.1), "0.10000000000000001");
}

GTEST_TEST(RunnerTest, ClosedLoopMatchesAnalyticSolution) {
    const auto r = example_2_2_closed_loop(1.0, 1e-4, 3.0);
    EXPECT_LE(r.max_abs_error, 1e-3);
    const auto o = example_2_2_open_loop(1.0, 1e-4, 3.0, 1e3);
    ASSERT_TRUE(o.exit_time.has_value());
    EXPECT_LT(*o.exit_time, 3.0);
}

GTEST_TEST(CliTest, AreReportsUnitSolution) {
    const auto r = run_cli("are --plant example_2_1");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("P_inf = 1.000000"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("Theta_inf = -0.500000"), std::string::npos) << r.out;
}

GTEST_TEST(CliTest, UsageErrors) {
    EXPECT_EQ(run_cli("").status, 2);
    EXPECT_EQ(run_cli("frobnicate").status, 2);
    EXPECT_EQ(run_cli("are --bogus").status, 2);
    EXPECT_EQ(run_cli("analyze").status, 2);
    const fs::path dir = scratch_dir("usage");
    std::ofstream(dir / "empty.json").close();
    EXPECT_EQ(run_cli("analyze --scenario " + (dir / "empty.json").string()).status, 2);
    EXPECT_EQ(run_cli("reproduce example-9-9 --out " + dir.string()).status, 2);
}

GTEST_TEST(CliTest, StabilizabilityExitCode) {
    const fs::path dir = scratch_dir("stab");
    std::ofstream(dir / "stuck.json") << R"({
  "name": "stuck",
  "model": {"type": "linear", "A": 1.0, "B": 0.0, "C": 0.0, "D": 0.0},
  "weights": {"Q": 1.0, "R": 1.0},
  "smpc": {"T": 1.0, "tau": 0.5, "x0": [1.0], "t_end": 1.0, "n_paths": 2}
})";
    const auto bad = run_cli("stabilizable --scenario " + (dir / "stuck.json").string());
    EXPECT_EQ(bad.status, 1);
    EXPECT_NE(bad.out.find("L2-stabilizable: no"), std::string::npos);
    EXPECT_EQ(run_cli("stabilizable --plant example_2_2").status, 0);
    EXPECT_EQ(run_cli("are --scenario " + (dir / "stuck.json").string()).status, 3);
}

GTEST_TEST(CliTest, GainsAndGapStudy) {
    const auto g = run_cli("gains --plant example_2_1 --T 1 --tau 0.5 --h 0.01");
    EXPECT_EQ(g.status, 0);
    EXPECT_EQ(std::count(g.out.begin(), g.out.end(), '\n'), 52);
    const auto s = run_cli("gap-study --plant example_2_1 --tau 0.25 --gaps 0.25,0.5,1 --G 2");
    EXPECT_EQ(s.status, 0) << s.out;
}

GTEST_TEST(CliTest, AnalyzeIsReproducible) {
    const fs::path a = scratch_dir("analyze_a");
    const fs::path b = scratch_dir("analyze_b");
    std::ofstream(a / "small.json") << kSmall;
    const std::string base = "analyze --scenario " + (a / "small.json").string() + " --seed 5 --out ";
    const auto ra = run_cli(base + (a / "o").string());
    const auto rb = run_cli(base + (b / "o").string());
    EXPECT_EQ(ra.status, 0);
    EXPECT_EQ(rb.status, 0);
    EXPECT_EQ(read_file(a / "o" / "mean_square.csv"), read_file(b / "o" / "mean_square.csv"));
    EXPECT_EQ(read_file(a / "o" / "summary.json"), read_file(b / "o" / "summary.json"));
}

} // namespace
} // namespace smpc_lab
