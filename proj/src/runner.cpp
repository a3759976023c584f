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

#include "smpc_lab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "smpc_lab/models.hpp"

namespace smpc_lab {

using nlohmann::json;

namespace {

std::ofstream open_output(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ValidationError, "output_dir: cannot write '" + path + "'");
    return out;
}

std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

json matrix_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

std::string matrix_text(const Matrix& M) {
    if (M.size() == 1) return format_number(M(0, 0));
    std::string s = "[";
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        s += i ? "; " : "";
        for (Eigen::Index j = 0; j < M.cols(); ++j) s += (j ? ", " : "") + format_number(M(i, j));
    }
    return s + "]";
}

int verdict_rank(Verdict v) {
    switch (v) {
    case Verdict::StableWithinBound: return 2;
    case Verdict::RateOnly: return 1;
    case Verdict::BlowupSuspected: return 0;
    }
    return 0;
}

struct Check {
    std::string name;
    bool passed = false;
};

class Collector {
public:
    void add(const std::string& name, bool passed) { checks_.push_back({name, passed}); }
    const std::vector<Check>& checks() const { return checks_; }
    bool all_passed() const {
        for (const auto& c : checks_) {
            if (!c.passed) return false;
        }
        return true;
    }
    json to_json() const {
        json out = json::array();
        for (const auto& c : checks_) out.push_back({{"name", c.name}, {"passed", c.passed}});
        return out;
    }
    RunOutcome outcome() const {
        RunOutcome o;
        for (const auto& c : checks_) {
            if (!c.passed) o.failed_checks.push_back(c.name);
        }
        o.exit_code = o.failed_checks.empty() ? kExitOk : kExitCheckFailed;
        return o;
    }

private:
    std::vector<Check> checks_;
};

ControllerMode make_mode(ControllerKind kind, GainSchedule schedule) {
    return ControllerMode{kind, std::move(schedule)};
}

struct Synthesis {
    AreSolution are;
    CostWeights weights;
    StabilityConstants constants;
    RiccatiSolution riccati;
    ConvergenceReport convergence;
    GainSchedule schedule;
};

Synthesis synthesize(const Scenario& s, double riccati_horizon) {
    const LinearPlant& plant = s.model.linearization;
    AreSolution are = solve_are(plant, CostWeights(s.Q, s.R));
    CostWeights weights = s.weights(are.P_inf);
    StabilityConstants constants = stability_constants(are.P_inf, plant, weights);
    const double h = s.smpc.h;
    const double span = std::max(s.smpc.T, riccati_horizon);
    const double steps = std::ceil(span / h - kGridTolerance * span / h);
    RiccatiSolution riccati = integrate_riccati(plant, weights, steps * h, h);
    ConvergenceReport convergence = riccati_convergence_report(riccati, are, constants);
    GainSchedule schedule = build_gain_schedule(riccati, are, s.smpc.T, s.smpc.tau);
    return {std::move(are), std::move(weights), std::move(constants), std::move(riccati), std::move(convergence),
            std::move(schedule)};
}

json synthesis_json(const Synthesis& syn) {
    json constants = {{"K0", syn.constants.K0},
                      {"lambda_inf", syn.constants.lambda_inf},
                      {"lambda_star", syn.constants.lambda_star},
                      {"theta_inf", matrix_json(syn.constants.theta_inf)}};
    constants["K1"] = syn.constants.K1 ? json(*syn.constants.K1) : json(nullptr);
    json riccati = {{"horizon", syn.riccati.horizon()},
                    {"bound_checked", syn.convergence.bound_checked},
                    {"bound_holds", syn.convergence.bound_holds}};
    riccati["entry_time"] = syn.convergence.entry_time ? json(*syn.convergence.entry_time) : json(nullptr);
    return {{"are",
             {{"P_inf", matrix_json(syn.are.P_inf)},
              {"residual", syn.are.residual},
              {"horizon_used", syn.are.horizon_used},
              {"newton_iterations", syn.are.newton_iterations}}},
            {"constants", constants},
            {"riccati", riccati}};
}

void write_synthesis_text(std::ostream& out, const Scenario& s, const Synthesis& syn) {
    out << "scenario: " << s.name << "\n";
    out << "model: " << s.model_type << ", mode: " << to_string(s.mode) << "\n";
    out << "P_inf = " << matrix_text(syn.are.P_inf) << " (residual " << format_number(syn.are.residual) << ")\n";
    out << "Theta_inf = " << matrix_text(syn.constants.theta_inf) << "\n";
    out << "K0 = " << format_number(syn.constants.K0) << ", lambda_inf = " << format_number(syn.constants.lambda_inf)
        << ", lambda_star = " << format_number(syn.constants.lambda_star) << "\n";
    if (syn.constants.K1) {
        out << "K1 = " << format_number(*syn.constants.K1) << ", Riccati bound "
            << (syn.convergence.bound_holds ? "holds" : "violated") << " on [0, "
            << format_number(syn.riccati.horizon()) << "]\n";
    } else {
        out << "G does not dominate P_inf; entry radius " << format_number(syn.convergence.entry_radius)
            << ", entry time "
            << (syn.convergence.entry_time ? format_number(*syn.convergence.entry_time) : std::string("not reached"))
            << "\n";
    }
}

double requested_riccati_horizon(const Scenario& s) {
    for (const auto& a : s.analyses) {
        if (const auto* r = std::get_if<RiccatiAnalysis>(&a)) return r->horizon;
    }
    return 5.0;
}

const MeanSquareAnalysis* first_mean_square(const Scenario& s) {
    for (const auto& a : s.analyses) {
        if (const auto* m = std::get_if<MeanSquareAnalysis>(&a)) return m;
    }
    return nullptr;
}

BoundParams bound_params(const MeanSquareAnalysis& m, const Scenario& s, const PathEnsemble& ens) {
    BoundParams p;
    p.K = m.K;
    p.L = m.L;
    p.T = s.smpc.T;
    p.tau = s.smpc.tau;
    p.fit_t_a = m.fit_t_a;
    p.fit_t_b = m.fit_t_b;
    p.n_paths = ens.n_paths;
    p.n_diverged = ens.n_diverged;
    return p;
}

SimulationOptions simulation_options(const Scenario& s, const CostWeights& weights) {
    SimulationOptions options;
    options.exit_radius = s.exit_radius;
    for (const auto& a : s.analyses) {
        if (const auto* c = std::get_if<CostAnalysis>(&a); c && c->monte_carlo) options.cost_weights = weights;
    }
    return options;
}

json simulation_json(const PathEnsemble& ens) {
    return {{"n_paths", ens.n_paths},
            {"n_diverged", ens.n_diverged},
            {"n_exited", ens.n_exited},
            {"max_abs_prediction_error", ens.max_abs_error}};
}

void write_summary(const std::string& dir, json summary) {
    std::ofstream out = open_output(join(dir, "summary.json"));
    out << summary.dump(2) << "\n";
}

} // namespace

int exit_code_for(const Error& error) {
    switch (error.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::UnknownKey:
        return kExitUsage;
    default:
        return kExitNumerical;
    }
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_mean_square_csv(const std::string& path, const MeanSquareCurve& curve, const std::vector<double>& bound) {
    std::ofstream out = open_output(path);
    out << "t,ms_estimate,ms_stderr,bound,n_effective\n";
    for (std::size_t i = 0; i < curve.estimate.size(); ++i) {
        out << format_full(curve.grid.t(i)) << ',' << format_full(curve.estimate[i]) << ','
            << format_full(curve.std_error[i]) << ',' << format_full(i < bound.size() ? bound[i] : NAN) << ','
            << curve.n_effective[i] << '\n';
    }
}

void write_riccati_csv(const std::string& path, const ConvergenceReport& report) {
    std::ofstream out = open_output(path);
    out << "t,sigma_gap,k1_bound\n";
    for (const auto& row : report.rows) {
        out << format_full(row.t) << ',' << format_full(row.gap) << ',' << format_full(row.bound.value_or(NAN))
            << '\n';
    }
}

RunOutcome run_scenario(const Scenario& s, std::ostream& log) {
    Collector checks;
    const Synthesis syn = synthesize(s, requested_riccati_horizon(s));
    const LinearPlant& plant = s.model.linearization;
    write_riccati_csv(join(s.output_dir, "riccati_convergence.csv"), syn.convergence);

    const ControllerMode mode = make_mode(s.mode, syn.schedule);
    const PathEnsemble ens = simulate_ensemble(s.model, mode, s.smpc, simulation_options(s, syn.weights));
    const MeanSquareCurve curve = mean_square_curve(ens);

    const MeanSquareAnalysis default_ms;
    const MeanSquareAnalysis& primary = first_mean_square(s) ? *first_mean_square(s) : default_ms;
    write_mean_square_csv(join(s.output_dir, "mean_square.csv"), curve,
                          theorem_bound_curve(curve.grid, syn.constants, syn.are.P_inf, s.smpc.x0, primary.theorem,
                                              bound_params(primary, s, ens)));

    std::ostringstream text;
    write_synthesis_text(text, s, syn);
    text << "paths: " << ens.n_paths << ", diverged: " << ens.n_diverged << ", exited: " << ens.n_exited
         << ", max |eps|: " << format_number(ens.max_abs_error) << "\n";

    json summary = {{"name", s.name}, {"model", s.model_type}, {"mode", to_string(s.mode)}};
    summary.update(synthesis_json(syn));
    summary["simulation"] = simulation_json(ens);
    json analyses = json::array();

    for (const auto& request : s.analyses) {
        if (const auto* m = std::get_if<MeanSquareAnalysis>(&request)) {
            const StabilityReport rep = check_theorem_bound(curve, syn.constants, syn.are.P_inf, s.smpc.x0, m->theorem,
                                                            bound_params(*m, s, ens));
            text << "[mean_square " << to_string(m->theorem) << "] verdict " << to_string(rep.verdict)
                 << ", bound rate " << format_number(rep.bound_rate) << ", violations "
                 << format_number(rep.violation_fraction) << ", fitted rate "
                 << (rep.fit ? format_number(rep.fit->rate) + " +- " + format_number(rep.fit->ci_half_width)
                             : std::string("n/a"))
                 << "\n";
            json j = {{"type", "mean_square"},
                      {"theorem", to_string(m->theorem)},
                      {"verdict", to_string(rep.verdict)},
                      {"bound_rate", rep.bound_rate},
                      {"violation_fraction", rep.violation_fraction},
                      {"diverged_fraction", rep.diverged_fraction}};
            j["fitted_rate"] = rep.fit ? json(rep.fit->rate) : json(nullptr);
            analyses.push_back(j);
            if (m->require_verdict) {
                checks.add(std::string("verdict ") + to_string(m->theorem) + " >= " + to_string(*m->require_verdict),
                           verdict_rank(rep.verdict) >= verdict_rank(*m->require_verdict));
            }
            if (m->require_rate_at_most) {
                checks.add("fitted rate <= " + format_number(*m->require_rate_at_most),
                           rep.fit && rep.fit->rate <= *m->require_rate_at_most);
            }
        } else if (const auto* r = std::get_if<RiccatiAnalysis>(&request)) {
            analyses.push_back({{"type", "riccati_convergence"},
                                {"bound_checked", syn.convergence.bound_checked},
                                {"bound_holds", syn.convergence.bound_holds}});
            if (r->require_bound) checks.add("Riccati gap within K1 e^{-2 lambda_inf t}", syn.convergence.bound_holds);
        } else if (const auto* c = std::get_if<CostAnalysis>(&request)) {
            json j = {{"type", "cost"}, {"optimal", 0.5 * s.smpc.x0.dot(syn.are.P_inf * s.smpc.x0)}};
            if (s.mode != ControllerKind::OpenLoop) {
                const GainSchedule gains = mode.uses_schedule()
                                               ? syn.schedule
                                               : constant_schedule(syn.constants.theta_inf, s.smpc.tau, s.smpc.h);
                const CostEstimate est = cost_lyapunov_linear(plant, syn.weights, gains, s.smpc.x0, c->horizon);
                j["lyapunov"] = {{"value", est.value}, {"tail_bound", est.tail_bound}, {"horizon", est.truncation_horizon}};
                text << "[cost] linear closed loop J = " << format_number(est.value) << " (tail <= "
                     << format_number(est.tail_bound) << "), optimal " << format_number(j["optimal"].get<double>())
                     << "\n";
            }
            if (c->monte_carlo) {
                const CostEstimate est = cost_monte_carlo(ens, syn.weights, syn.constants.theta_inf);
                j["monte_carlo"] = {{"value", est.value}, {"std_error", est.std_error}, {"horizon", est.truncation_horizon}};
                text << "[cost] Monte Carlo J = " << format_number(est.value) << " +- " << format_number(est.std_error)
                     << "\n";
            }
            analyses.push_back(j);
        } else if (const auto* g = std::get_if<GapAnalysis>(&request)) {
            const double horizon = std::max(20.0, 10.0 * s.smpc.tau);
            const GapStudy study = suboptimality_gap_study(plant, syn.weights, g->gaps, s.smpc.tau, s.smpc.x0, s.smpc.h,
                                                           std::ceil(horizon / s.smpc.tau) * s.smpc.tau);
            json rows = json::array();
            for (const auto& row : study.rows) {
                rows.push_back({{"gap", row.gap}, {"cost", row.cost}, {"value", row.value}});
                text << "[gap_study] T - tau = " << format_number(row.gap) << ": J - V = " << format_number(row.value)
                     << "\n";
            }
            json j = {{"type", "gap_study"}, {"rows", rows}, {"decreasing", study.decreasing},
                      {"nonnegative", study.nonnegative}};
            j["last_slope"] = study.last_slope ? json(*study.last_slope) : json(nullptr);
            analyses.push_back(j);
            if (g->require_decreasing) checks.add("gap nonnegative and decreasing", study.decreasing && study.nonnegative);
        } else if (const auto* b = std::get_if<BlowupAnalysis>(&request)) {
            const BlowupReport rep = blowup_probe(s.model, mode, s.smpc, b->probe_time, b->requests, b->sizes);
            json rows = json::array();
            for (const auto& row : rep.rows) {
                rows.push_back({{"observable", to_string(row.request.observable)},
                                {"order", row.request.order},
                                {"sizes", row.sizes},
                                {"estimates", row.estimates},
                                {"flagged", row.flagged}});
                text << "[blowup] " << to_string(row.request.observable) << "^" << format_number(row.request.order)
                     << " at t = " << format_number(rep.probe_time) << ": " << (row.flagged ? "flagged" : "stable")
                     << "\n";
            }
            analyses.push_back({{"type", "blowup"}, {"rows", rows}, {"any_flagged", rep.any_flagged}});
            if (b->expect_flag) checks.add("blow-up flag matches expectation", rep.any_flagged == *b->expect_flag);
        }
    }

    const RunOutcome outcome = checks.outcome();
    for (const auto& c : checks.checks()) text << (c.passed ? "PASS " : "FAIL ") << c.name << "\n";
    {
        std::ofstream out = open_output(join(s.output_dir, "stability_report.txt"));
        out << text.str();
    }
    summary["analyses"] = analyses;
    summary["checks"] = checks.to_json();
    summary["passed"] = checks.all_passed();
    write_summary(s.output_dir, summary);
    log << text.str();
    return outcome;
}

RunOutcome simulate_scenario(const Scenario& s, std::ostream& log) {
    const Synthesis syn = synthesize(s, s.smpc.T);
    const ControllerMode mode = make_mode(s.mode, syn.schedule);
    const PathEnsemble ens = simulate_ensemble(s.model, mode, s.smpc, simulation_options(s, syn.weights));
    const MeanSquareCurve curve = mean_square_curve(ens);
    const MeanSquareAnalysis default_ms;
    const MeanSquareAnalysis& primary = first_mean_square(s) ? *first_mean_square(s) : default_ms;
    write_mean_square_csv(join(s.output_dir, "mean_square.csv"), curve,
                          theorem_bound_curve(curve.grid, syn.constants, syn.are.P_inf, s.smpc.x0, primary.theorem,
                                              bound_params(primary, s, ens)));
    json summary = {{"name", s.name}, {"model", s.model_type}, {"mode", to_string(s.mode)}};
    summary.update(synthesis_json(syn));
    summary["simulation"] = simulation_json(ens);
    write_summary(s.output_dir, summary);
    log << "simulated " << ens.n_paths << " paths (" << ens.n_diverged << " diverged); E|Y(t_end)|^2 = "
        << format_number(curve.estimate.back()) << " +- " << format_number(curve.std_error.back()) << "\n";
    return {};
}

ClosedLoopReproduction example_2_2_closed_loop(double x, double h, double t_end) {
    const RegisteredModel reg = registered_model("example_2_2");
    const AreSolution are = solve_are(reg.model.linearization, CostWeights(reg.Q, reg.R));
    const Matrix theta = op_K(are.P_inf, reg.model.linearization, CostWeights(reg.Q, reg.R));
    SmpcConfig config;
    config.h = h;
    config.tau = 100 * h;
    config.T = config.tau;
    config.t_end = t_end;
    config.x0 = Vector::Constant(1, x);
    config.n_paths = 1;
    const CoupledTrajectory traj = simulate_path(reg.model, ControllerMode::static_are(constant_schedule(theta, config.tau, h)),
                                                 config, 0);
    ClosedLoopReproduction out;
    out.grid = traj.grid;
    for (std::size_t i = 0; i < traj.y.size(); ++i) {
        const double t = traj.grid.t(i);
        const double exact = 4.0 * x / (x - (x - 4.0) * std::exp(2.0 * t));
        out.y.push_back(traj.y[i](0));
        out.analytic.push_back(exact);
        const double err = std::abs(traj.y[i](0) - exact);
        out.max_abs_error = std::isfinite(err) ? std::max(out.max_abs_error, err) : INFINITY;
    }
    return out;
}

OpenLoopReproduction example_2_2_open_loop(double x, double h, double t_end, double radius) {
    const RegisteredModel reg = registered_model("example_2_2");
    const AreSolution are = solve_are(reg.model.linearization, CostWeights(reg.Q, reg.R));
    const Matrix theta = op_K(are.P_inf, reg.model.linearization, CostWeights(reg.Q, reg.R));
    SmpcConfig config;
    config.h = h;
    config.tau = 100 * h;
    config.T = config.tau;
    config.t_end = t_end;
    config.x0 = Vector::Constant(1, x);
    config.n_paths = 1;
    SimulationOptions options;
    options.exit_radius = radius;
    const CoupledTrajectory traj = simulate_path(reg.model, ControllerMode::open_loop(constant_schedule(theta, config.tau, h)),
                                                 config, 0, options);
    OpenLoopReproduction out;
    out.grid = traj.grid;
    for (const auto& y : traj.y) out.y.push_back(y(0));
    out.exit_time = traj.exit_time;
    return out;
}

BlowupComparison example_2_1_blowup(double x, std::uint64_t seed, const std::vector<std::size_t>& sizes) {
    const RegisteredModel reg = registered_model("example_2_1");
    const LinearPlant& plant = reg.model.linearization;
    const AreSolution are = solve_are(plant, CostWeights(reg.Q, reg.R));
    const CostWeights weights(reg.Q, reg.R, are.P_inf);
    SmpcConfig config;
    config.T = 0.5;
    config.tau = 0.5;
    config.h = 1e-3;
    config.t_end = 0.5;
    config.x0 = Vector::Constant(1, x);
    config.seed = seed;
    const ControllerMode mode = ControllerMode::smpc(synthesize_schedule(plant, weights, are, config.T, config.tau, config.h));
    const std::vector<ProbeRequest> requests{{ProbeObservable::ControlDrift, 1.0}};
    return {blowup_probe(reg.model, mode, config, 0.25, requests, sizes),
            blowup_probe(models::linear(plant), mode, config, 0.25, requests, sizes)};
}

const std::string& example_2_1_scenario_text() {
    static const std::string text = R"({
  "name": "example_2_1",
  "model": {"type": "example_2_1"},
  "weights": {"Q": 2.5, "R": 1.0, "G": "P_inf"},
  "smpc": {"T": 1.5, "tau": 0.5, "h": 0.001, "x0": [1.0], "t_end": 2.0, "n_paths": 10000, "seed": 1},
  "mode": "rhc",
  "analyses": [
    {"type": "mean_square", "theorem": "T2_1", "fit_window": [0.2, 1.5], "require_verdict": "STABLE_WITHIN_BOUND"},
    {"type": "riccati_convergence", "horizon": 5.0, "require_bound": true},
    {"type": "cost", "horizon": 20.0, "monte_carlo": true}
  ],
  "output_dir": "out/example_2_1"
}
)";
    return text;
}

std::vector<std::string> reproduce_ids() {
    return {"example-2-1", "example-2-1-blowup", "example-2-2-closed-loop", "example-2-2-open-loop"};
}

RunOutcome reproduce(const std::string& id, const std::string& out_dir, std::optional<std::uint64_t> seed,
                     std::ostream& log) {
    Collector checks;
    if (id == "example-2-2-closed-loop") {
        const ClosedLoopReproduction r = example_2_2_closed_loop(1.0, 1e-4, 3.0);
        std::ofstream out = open_output(join(out_dir, "trajectory.csv"));
        out << "t,y,analytic,abs_error\n";
        for (std::size_t i = 0; i < r.y.size(); ++i) {
            out << format_full(r.grid.t(i)) << ',' << format_full(r.y[i]) << ',' << format_full(r.analytic[i]) << ','
                << format_full(std::abs(r.y[i] - r.analytic[i])) << '\n';
        }
        log << "closed loop, x = 1, h = 1e-4: max |Y(t) - 4x/(x-(x-4)e^{2t})| on [0, 3] = "
            << format_number(r.max_abs_error) << "\n";
        checks.add("closed-loop error <= 1e-3", r.max_abs_error <= 1e-3);
    } else if (id == "example-2-2-open-loop") {
        const OpenLoopReproduction r = example_2_2_open_loop(1.0, 1e-4, 3.0, 1e3);
        std::ofstream out = open_output(join(out_dir, "trajectory.csv"));
        out << "t,y\n";
        for (std::size_t i = 0; i < r.y.size(); ++i) out << format_full(r.grid.t(i)) << ',' << format_full(r.y[i]) << '\n';
        if (r.exit_time) {
            log << "open loop, x = 1: |Y| first exceeds 1e3 at t = " << format_number(*r.exit_time)
                << " (trajectory frozen afterwards)\n";
        } else {
            log << "open loop, x = 1: |Y| stays below 1e3 on [0, 3]\n";
        }
        checks.add("open-loop blow-up before t = 3", r.exit_time && *r.exit_time < 3.0);
    } else if (id == "example-2-1") {
        Scenario s = parse_scenario_text(example_2_1_scenario_text());
        ScenarioOverrides o;
        o.seed = seed;
        o.out = out_dir;
        apply_overrides(s, o);
        return run_scenario(s, log);
    } else if (id == "example-2-1-blowup") {
        const std::vector<std::size_t> sizes{100, 1000, 10000};
        const BlowupComparison cmp = example_2_1_blowup(-48.0, seed.value_or(1), sizes);
        std::ofstream out = open_output(join(out_dir, "blowup.csv"));
        out << "n,exponential_system,linear_plant\n";
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            out << sizes[k] << ',' << format_full(cmp.nonlinear.rows[0].estimates[k]) << ','
                << format_full(cmp.linear.rows[0].estimates[k]) << '\n';
        }
        log << "E|b(0, u_M(0.25))| with x = -48, tau = 0.5:\n";
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            log << "  n = " << sizes[k] << ": exponential " << format_number(cmp.nonlinear.rows[0].estimates[k])
                << ", linear " << format_number(cmp.linear.rows[0].estimates[k]) << "\n";
        }
        log << "exponential system " << (cmp.nonlinear.any_flagged ? "flagged" : "not flagged") << ", linear plant "
            << (cmp.linear.any_flagged ? "flagged" : "not flagged") << "\n";
        checks.add("exponential system flagged", cmp.nonlinear.any_flagged);
        checks.add("linear plant not flagged", !cmp.linear.any_flagged);
    } else {
        throw Error(ErrorCode::ValidationError, "example-id: unknown id '" + id + "'");
    }
    for (const auto& c : checks.checks()) log << (c.passed ? "PASS " : "FAIL ") << c.name << "\n";
    return checks.outcome();
}

} // namespace smpc_lab
