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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smpc_lab/acceptance.hpp"
#include "smpc_lab/analysis.hpp"
#include "smpc_lab/riccati.hpp"
#include "smpc_lab/runner.hpp"
#include "smpc_lab/scenario.hpp"
#include "smpc_lab/smpc.hpp"

namespace {

using namespace smpc_lab;

struct PlantSource {
    std::string plant;
    std::string scenario;
    std::optional<double> G;
};

struct Problem {
    LinearPlant plant;
    Matrix Q;
    Matrix R;
    std::optional<Matrix> G;
    std::optional<Scenario> scenario;
};

void add_plant_options(CLI::App* cmd, PlantSource& src) {
    auto* p = cmd->add_option("--plant", src.plant, "built-in model: example_2_1 or example_2_2");
    auto* s = cmd->add_option("--scenario", src.scenario, "scenario file");
    p->excludes(s);
}

Problem load_problem(const PlantSource& src) {
    Problem out;
    if (!src.scenario.empty()) {
        Scenario s = parse_scenario(src.scenario);
        out.plant = s.model.linearization;
        out.Q = s.Q;
        out.R = s.R;
        out.G = s.G;
        out.scenario = std::move(s);
    } else {
        const RegisteredModel reg = registered_model(src.plant.empty() ? "example_2_1" : src.plant);
        out.plant = reg.model.linearization;
        out.Q = reg.Q;
        out.R = reg.R;
    }
    if (src.G) out.G = *src.G * Matrix::Identity(out.plant.n(), out.plant.n());
    return out;
}

void print_matrix(const char* label, const Matrix& M) {
    if (M.size() == 1) {
        std::printf("%s = %.6f\n", label, M(0, 0));
        return;
    }
    std::printf("%s =\n", label);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) std::printf("%s%.6f", j ? " " : "  ", M(i, j));
        std::printf("\n");
    }
}

int cmd_are(const PlantSource& src, double tol) {
    const Problem p = load_problem(src);
    AreOptions options;
    options.tol = tol;
    const AreSolution are = solve_are(p.plant, CostWeights(p.Q, p.R), options);
    print_matrix("P_inf", are.P_inf);
    print_matrix("Theta_inf", op_K(are.P_inf, p.plant, CostWeights(p.Q, p.R)));
    std::printf("residual = %.3e\n", are.residual);
    return kExitOk;
}

int cmd_stabilizable(const PlantSource& src) {
    const Problem p = load_problem(src);
    const StabilizabilityResult r = check_l2_stabilizable(p.plant);
    std::printf("L2-stabilizable: %s\n", r.stabilizable ? "yes" : "no");
    if (r.certificate) print_matrix("certificate P", *r.certificate);
    std::printf("%s\n", r.diagnostic.c_str());
    return r.stabilizable ? kExitOk : kExitCheckFailed;
}

int cmd_riccati(const PlantSource& src, double horizon, std::optional<double> h, const std::string& out) {
    const Problem p = load_problem(src);
    const CostWeights base(p.Q, p.R);
    const AreSolution are = solve_are(p.plant, base);
    const CostWeights w = base.with_terminal(p.G ? *p.G : are.P_inf);
    const double step = h ? *h : (p.scenario ? p.scenario->smpc.h : 1e-3);
    const RiccatiSolution sol = integrate_riccati(p.plant, w, horizon, step);
    const StabilityConstants c = stability_constants(are.P_inf, p.plant, w);
    const ConvergenceReport rep = riccati_convergence_report(sol, are, c);
    const std::string path = (std::filesystem::path(out) / "riccati_convergence.csv").string();
    write_riccati_csv(path, rep);
    std::printf("Sigma(%g) gap to P_inf = %.6e\n", horizon, rep.rows.back().gap);
    if (rep.bound_checked) {
        std::printf("K1 = %.6f, bound K1 e^{-2 lambda_inf t} %s\n", *c.K1, rep.bound_holds ? "holds" : "violated");
    } else {
        std::printf("G does not dominate P_inf; entry radius %.6e, entry time %s\n", rep.entry_radius,
                    rep.entry_time ? format_number(*rep.entry_time).c_str() : "not reached");
    }
    std::printf("wrote %s\n", path.c_str());
    return rep.bound_checked && !rep.bound_holds ? kExitCheckFailed : kExitOk;
}

int cmd_gains(const PlantSource& src, std::optional<double> T, std::optional<double> tau, std::optional<double> h) {
    const Problem p = load_problem(src);
    const CostWeights base(p.Q, p.R);
    const AreSolution are = solve_are(p.plant, base);
    const CostWeights w = base.with_terminal(p.G ? *p.G : are.P_inf);
    const double TT = T ? *T : (p.scenario ? p.scenario->smpc.T : 1.0);
    const double tt = tau ? *tau : (p.scenario ? p.scenario->smpc.tau : 0.5);
    const double hh = h ? *h : (p.scenario ? p.scenario->smpc.h : default_step(TT, tt));
    const GainSchedule g = synthesize_schedule(p.plant, w, are, TT, tt, hh);
    std::printf("s");
    for (Eigen::Index i = 0; i < g.theta_inf.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.theta_inf.cols(); ++j) std::printf(",theta_%ld%ld", static_cast<long>(i), static_cast<long>(j));
    }
    std::printf("\n");
    for (std::size_t k = 0; k < g.theta.size(); ++k) {
        std::printf("%s", format_full(static_cast<double>(k) * g.h).c_str());
        for (Eigen::Index i = 0; i < g.theta[k].rows(); ++i) {
            for (Eigen::Index j = 0; j < g.theta[k].cols(); ++j) std::printf(",%s", format_full(g.theta[k](i, j)).c_str());
        }
        std::printf("\n");
    }
    return kExitOk;
}

int cmd_gap_study(const PlantSource& src, double tau, const std::vector<double>& gaps, std::optional<double> h,
                  std::optional<double> x) {
    const Problem p = load_problem(src);
    const CostWeights base(p.Q, p.R);
    const AreSolution are = solve_are(p.plant, base);
    const CostWeights w = base.with_terminal(p.G ? *p.G : are.P_inf);
    Vector x0 = p.scenario ? p.scenario->smpc.x0 : Vector::Ones(p.plant.n());
    if (x) x0 = Vector::Constant(p.plant.n(), *x);
    const double hh = h ? *h : 1e-3;
    const GapStudy study = suboptimality_gap_study(p.plant, w, gaps, tau, x0, hh, std::ceil(30.0 / tau) * tau);
    std::printf("T-tau,cost,gap\n");
    for (const auto& row : study.rows) {
        std::printf("%s,%s,%s\n", format_full(row.gap).c_str(), format_full(row.cost).c_str(),
                    format_full(row.value).c_str());
    }
    std::printf("nonnegative: %s, decreasing: %s, last log slope: %s\n", study.nonnegative ? "yes" : "no",
                study.decreasing ? "yes" : "no",
                study.last_slope ? format_number(*study.last_slope).c_str() : "n/a");
    return kExitOk;
}

int cmd_selftest(const std::string& out) {
    const std::vector<acceptance::CriterionResult> results = acceptance::run_selftest();
    int passed = 0;
    for (const auto& r : results) {
        std::printf("%s\n", acceptance::format(r).c_str());
        passed += r.passed ? 1 : 0;
    }
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        const RegisteredModel reg = registered_model("example_2_1");
        const CostWeights base(reg.Q, reg.R);
        const AreSolution are = solve_are(reg.model.linearization, base);
        const CostWeights w = base.with_terminal(Matrix::Constant(1, 1, 2.0));
        const RiccatiSolution sol = integrate_riccati(reg.model.linearization, w, 5.0, 1e-3);
        write_riccati_csv((std::filesystem::path(out) / "riccati_convergence.csv").string(),
                          riccati_convergence_report(sol, are, stability_constants(are.P_inf, reg.model.linearization, w)));
        const ClosedLoopReproduction closed = example_2_2_closed_loop(1.0, 1e-4, 3.0);
        std::ofstream csv(std::filesystem::path(out) / "trajectory.csv", std::ios::binary | std::ios::trunc);
        csv << "t,y,analytic,abs_error\n";
        for (std::size_t i = 0; i < closed.y.size(); ++i) {
            csv << format_full(closed.grid.t(i)) << ',' << format_full(closed.y[i]) << ','
                << format_full(closed.analytic[i]) << ',' << format_full(std::abs(closed.y[i] - closed.analytic[i]))
                << '\n';
        }
    }
    std::printf("selftest: %d/%zu criteria passed\n", passed, results.size());
    return passed == static_cast<int>(results.size()) ? kExitOk : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic MPC synthesis, simulation and stability analysis"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help message and exit");

    PlantSource src;
    ScenarioOverrides overrides;
    std::string scenario_path;
    std::string out_dir;
    double tol = 1e-10;
    double horizon = 5.0;
    std::optional<double> h, T, tau, x;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    std::vector<double> gaps;
    double gap_tau = 0.25;
    std::string example_id;

    auto* are = app.add_subcommand("are", "solve the algebraic Riccati equation");
    add_plant_options(are, src);
    are->add_option("--tol", tol, "residual tolerance");

    auto* stab = app.add_subcommand("stabilizable", "test L2-stabilizability of the plant");
    add_plant_options(stab, src);

    auto* ric = app.add_subcommand("riccati", "integrate the Riccati equation and tabulate convergence");
    add_plant_options(ric, src);
    ric->add_option("--horizon", horizon, "integration horizon");
    ric->add_option("--h", h, "step");
    ric->add_option("--G", src.G, "terminal weight G = g I (default P_inf)");
    ric->add_option("--out", out_dir, "output directory")->default_val(".");

    auto* gains = app.add_subcommand("gains", "print the gain schedule Theta(s) over one control cycle");
    add_plant_options(gains, src);
    gains->add_option("--T", T, "prediction horizon");
    gains->add_option("--tau", tau, "control horizon");
    gains->add_option("--h", h, "step");
    gains->add_option("--G", src.G, "terminal weight G = g I (default P_inf)");

    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "scenario file")->required();
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--paths", paths, "number of paths");
        cmd->add_option("--h", h, "integration step");
        cmd->add_option("--out", out_dir, "output directory");
    };
    auto* sim = app.add_subcommand("simulate", "simulate the closed loop and write the mean-square curve");
    add_run_options(sim);
    auto* ana = app.add_subcommand("analyze", "run a scenario with all requested analyses");
    add_run_options(ana);

    auto* gap = app.add_subcommand("gap-study", "receding-horizon cost gap against the infinite-horizon value");
    add_plant_options(gap, src);
    gap->add_option("--tau", gap_tau, "control horizon");
    gap->add_option("--gaps", gaps, "values of T - tau")->delimiter(',')->required();
    gap->add_option("--G", src.G, "terminal weight G = g I (default P_inf)");
    gap->add_option("--h", h, "step");
    gap->add_option("--x0", x, "initial state x0 = x 1");

    auto* rep = app.add_subcommand("reproduce", "reproduce a worked example");
    rep->add_option("example-id", example_id, "one of: example-2-1, example-2-1-blowup, example-2-2-closed-loop, example-2-2-open-loop")
        ->required();
    rep->add_option("--out", out_dir, "output directory");
    rep->add_option("--seed", seed, "random seed");

    auto* self = app.add_subcommand("selftest", "run the deterministic acceptance criteria");
    self->add_option("--seed", seed, "random seed (unused by the deterministic criteria)");
    self->add_option("--out", out_dir, "write the selftest CSVs here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*are) return cmd_are(src, tol);
        if (*stab) return cmd_stabilizable(src);
        if (*ric) return cmd_riccati(src, horizon, h, out_dir);
        if (*gains) return cmd_gains(src, T, tau, h);
        if (*gap) return cmd_gap_study(src, gap_tau, gaps, h, x);
        if (*sim || *ana) {
            Scenario s = parse_scenario(scenario_path);
            const CLI::App* cmd = *sim ? sim : ana;
            if (cmd->count("--seed")) overrides.seed = seed;
            if (cmd->count("--paths")) overrides.paths = paths;
            if (h) overrides.h = h;
            if (cmd->count("--out")) overrides.out = out_dir;
            apply_overrides(s, overrides);
            const RunOutcome r = *sim ? simulate_scenario(s, std::cout) : run_scenario(s, std::cout);
            for (const auto& f : r.failed_checks) std::cerr << "check failed: " << f << "\n";
            return r.exit_code;
        }
        if (*rep) {
            const std::optional<std::uint64_t> s = rep->count("--seed") ? std::optional<std::uint64_t>(seed) : std::nullopt;
            return reproduce(example_id, out_dir.empty() ? "out/" + example_id : out_dir, s, std::cout).exit_code;
        }
        if (*self) return cmd_selftest(out_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
