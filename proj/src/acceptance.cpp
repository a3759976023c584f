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

#include "smpc_lab/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "smpc_lab/analysis.hpp"
#include "smpc_lab/models.hpp"
#include "smpc_lab/random.hpp"
#include "smpc_lab/runner.hpp"
#include "smpc_lab/scenario.hpp"

namespace smpc_lab::acceptance {

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

struct Example {
    LinearPlant plant;
    CostWeights weights;
    AreSolution are;
};

Example example(const std::string& name) {
    RegisteredModel reg = registered_model(name);
    CostWeights weights(reg.Q, reg.R);
    AreSolution are = solve_are(reg.model.linearization, weights);
    return {reg.model.linearization, weights, are};
}

std::string fmt(double v) { return format_number(v); }

template <class Fn>
CriterionResult guarded(int id, std::string name, Fn&& fn) {
    CriterionResult r{id, std::move(name), false, ""};
    try {
        fn(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("error: ") + e.what();
    }
    return r;
}

} // namespace

std::string format(const CriterionResult& r) {
    char head[16];
    std::snprintf(head, sizeof head, "%2d", r.id);
    return std::string(r.passed ? "PASS " : "FAIL ") + head + " " + r.name + ": " + r.detail;
}

double example_2_1_sigma_closed_form(double s0, double t) {
    // t(s) = -(1/3) [ (12/11) ln((s-1)/(s0-1)) - (1/11) ln((s+5/6)/(s0+5/6)) ], decreasing in s.
    auto time_of = [s0](double s) {
        return -(1.0 / 3.0) * ((12.0 / 11.0) * std::log((s - 1.0) / (s0 - 1.0)) -
                               (1.0 / 11.0) * std::log((s + 5.0 / 6.0) / (s0 + 5.0 / 6.0)));
    };
    if (t <= 0.0) return s0;
    double lo = 1.0, hi = s0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (time_of(mid) > t) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

CriterionResult are_correctness() {
    return guarded(1, "ARE correctness", [](CriterionResult& r) {
        const Example e1 = example("example_2_1");
        const Example e2 = example("example_2_2");
        const double theta2 = op_K(e2.are.P_inf, e2.plant, e2.weights)(0, 0);
        const double p1 = e1.are.P_inf(0, 0);
        const double p2 = e2.are.P_inf(0, 0);
        r.passed = std::abs(p1 - 1.0) <= 1e-9 && e1.are.residual <= 1e-10 && std::abs(p2 - 1.0) <= 1e-9 &&
                   e2.are.residual <= 1e-10 && std::abs(theta2 - 3.0) <= 1e-9;
        r.detail = "P_inf = " + fmt(p1) + " (residual " + fmt(e1.are.residual) + "); P_inf = " + fmt(p2) +
                   ", Theta_inf = " + fmt(theta2) + " (residual " + fmt(e2.are.residual) + ")";
    });
}

CriterionResult riccati_convergence() {
    return guarded(2, "Riccati fixed point and convergence", [](CriterionResult& r) {
        const double h = 1e-3;
        double fixed_gap = 0.0;
        for (const char* name : {"example_2_1", "example_2_2"}) {
            const Example e = example(name);
            const RiccatiSolution sol = integrate_riccati(e.plant, e.weights.with_terminal(e.are.P_inf), 5.0, h);
            for (const Matrix& s : sol.sigma) fixed_gap = std::max(fixed_gap, spectral_norm(s - e.are.P_inf));
        }
        const Example e = example("example_2_1");
        const CostWeights w = e.weights.with_terminal(scalar(2.0));
        const RiccatiSolution sol = integrate_riccati(e.plant, w, 5.0, h);
        const StabilityConstants c = stability_constants(e.are.P_inf, e.plant, w);
        const ConvergenceReport rep = riccati_convergence_report(sol, e.are, c);
        double oracle_gap = 0.0;
        for (std::size_t i = 0; i < sol.sigma.size(); ++i) {
            oracle_gap = std::max(oracle_gap,
                                  std::abs(sol.sigma[i](0, 0) - example_2_1_sigma_closed_form(2.0, sol.grid.t(i))));
        }
        const double K1 = c.K1.value_or(NAN);
        r.passed = fixed_gap <= 1e-9 && std::abs(K1 - 1.0) <= 1e-12 && rep.bound_holds && oracle_gap <= 1e-8;
        r.detail = "max |Sigma - P_inf| with G = P_inf: " + fmt(fixed_gap) + "; G = 2: K1 = " + fmt(K1) + ", bound " +
                   (rep.bound_holds ? "holds" : "violated") + ", max oracle error " + fmt(oracle_gap);
    });
}

CriterionResult fundamental_decay(std::uint64_t seed) {
    return guarded(3, "fundamental-solution decay", [seed](CriterionResult& r) {
        const Example e = example("example_2_1");
        const StabilityConstants c = stability_constants(e.are.P_inf, e.plant, e.weights);
        SmpcConfig config;
        config.h = 1e-3;
        config.t_end = 2.0;
        config.T = config.tau = 1.0;
        config.x0 = Vector::Ones(1);
        config.n_paths = 10000;
        config.seed = seed;
        const FundamentalEnsemble ens = simulate_fundamental(c.A_inf, c.C_inf, config);
        const MeanSquareCurve curve = mean_square_curve(ens);
        const DecayFit fit = fit_decay_rate(curve, 0.0, 2.0);
        std::vector<double> bound(curve.estimate.size());
        for (std::size_t i = 0; i < bound.size(); ++i) {
            bound[i] = c.K0 * std::exp(-2.0 * c.lambda_inf * curve.grid.t(i));
        }
        BoundParams params;
        params.n_paths = ens.n_paths;
        const StabilityReport rep = judge_against_bound(curve, bound, params);
        r.passed = std::abs(fit.rate + 2.75) <= 0.15 && rep.violation_fraction <= 0.01 &&
                   std::abs(c.K0 - 1.0) <= 1e-9 && std::abs(c.lambda_inf - 1.375) <= 1e-9;
        r.detail = "fitted rate " + fmt(fit.rate) + ", K0 = " + fmt(c.K0) + ", lambda_inf = " + fmt(c.lambda_inf) +
                   ", nodes above bound " + fmt(100.0 * rep.violation_fraction) + "%";
    });
}

CriterionResult rhc_bound(std::uint64_t seed) {
    return guarded(4, "RHC stability bound", [seed](CriterionResult& r) {
        const Example e = example("example_2_1");
        const CostWeights w = e.weights.with_terminal(e.are.P_inf);
        const StabilityConstants c = stability_constants(e.are.P_inf, e.plant, w);
        SmpcConfig config;
        config.T = 1.5;
        config.tau = 0.5;
        config.h = 1e-3;
        config.t_end = 2.0;
        config.x0 = Vector::Ones(1);
        config.n_paths = 10000;
        config.seed = seed;
        const ControllerMode mode = ControllerMode::rhc(synthesize_schedule(e.plant, w, e.are, config.T, config.tau, config.h));
        const PathEnsemble ens = simulate_ensemble(models::linear(e.plant), mode, config);
        const MeanSquareCurve curve = mean_square_curve(ens);
        BoundParams params;
        params.n_paths = ens.n_paths;
        params.n_diverged = ens.n_diverged;
        const StabilityReport rep = check_theorem_bound(curve, c, e.are.P_inf, config.x0, Theorem::T2_1, params);
        bool curve_ok = true;
        std::string z;
        for (double t : {0.5, 1.0, 2.0}) {
            const std::size_t i = curve.grid.index_of(t);
            const double dev = (curve.estimate[i] - std::exp(-2.75 * t)) / curve.std_error[i];
            curve_ok = curve_ok && std::abs(dev) <= 3.0;
            z += (z.empty() ? "" : ", ") + fmt(dev);
        }
        r.passed = rep.violation_fraction <= 0.01 && curve_ok;
        r.detail = "nodes within bound " + fmt(100.0 * (1.0 - rep.violation_fraction)) + "%, verdict " +
                   to_string(rep.verdict) + ", standardized deviation from e^{-2.75t} at t = 0.5, 1, 2: " + z;
    });
}

CriterionResult example_2_2_loops() {
    return guarded(5, "quadratic system closed and open loop", [](CriterionResult& r) {
        const ClosedLoopReproduction closed = example_2_2_closed_loop(1.0, 1e-4, 3.0);
        const OpenLoopReproduction open = example_2_2_open_loop(1.0, 1e-4, 3.0, 1e3);
        r.passed = closed.max_abs_error <= 1e-3 && open.exit_time && *open.exit_time < 3.0;
        r.detail = "closed-loop max error " + fmt(closed.max_abs_error) + "; open loop |Y| > 1e3 at t = " +
                   (open.exit_time ? fmt(*open.exit_time) : std::string("never"));
    });
}

CriterionResult suboptimality_gap() {
    return guarded(6, "suboptimality gap", [](CriterionResult& r) {
        const Example e = example("example_2_1");
        const StabilityConstants c = stability_constants(e.are.P_inf, e.plant, e.weights);
        const Vector x0 = Vector::Ones(1);
        const std::vector<double> gaps{0.5, 1.0, 1.5};
        const GapStudy g2 = suboptimality_gap_study(e.plant, e.weights.with_terminal(scalar(2.0)), gaps, 0.25, x0, 1e-3, 30.0);
        const GapStudy gp = suboptimality_gap_study(e.plant, e.weights.with_terminal(e.are.P_inf), gaps, 0.25, x0, 1e-3, 30.0);
        double anchor = 0.0;
        for (const auto& row : gp.rows) anchor = std::max(anchor, std::abs(row.value));
        const double slope = g2.last_slope.value_or(NAN);
        r.passed = g2.nonnegative && g2.decreasing && slope <= -2.0 * c.lambda_inf && anchor <= 1e-9;
        std::string values;
        for (const auto& row : g2.rows) values += (values.empty() ? "" : ", ") + fmt(row.value);
        r.detail = "G = 2 gaps " + values + ", log slope " + fmt(slope) + " (limit " + fmt(-2.0 * c.lambda_inf) +
                   "); G = P_inf max |gap| " + fmt(anchor);
    });
}

CriterionResult delayed_gronwall(std::uint64_t seed) {
    return guarded(7, "delayed Gronwall inequality", [seed](CriterionResult& r) {
        const double h = 1e-3;
        const NormalStream stream(seed, 7);
        int held = 0;
        double worst = -INFINITY;
        for (int trial = 0; trial < 20; ++trial) {
            const double k = 0.5 + 9.5 * stream.uniform(3 * trial);
            const double tau = h * std::max(1.0, std::round((0.05 + 1.95 * stream.uniform(3 * trial + 1)) / h));
            const double r_max = std::min(1.0 / tau, k / 4.0);
            const double rate = r_max * stream.uniform(3 * trial + 2);
            const GronwallCheck check = gronwall_delay_check(k, rate, tau, 1.0, 10.0, h);
            held += check.holds ? 1 : 0;
            worst = std::max(worst, check.max_excess);
        }
        r.passed = held == 20;
        r.detail = std::to_string(held) + "/20 triples satisfy y <= 2 y0 e^{-kt/2}, max excess " + fmt(worst);
    });
}

CriterionResult nonlinear_local_stability(std::uint64_t seed) {
    return guarded(8, "nonlinear local stability", [seed](CriterionResult& r) {
        const NonlinearModel model = models::polynomial({{0.0, -1.0}, {1.0}, {0.5}}, {{0.0}, {0.0}, {0.1}});
        const LinearPlant& plant = model.linearization;
        const CostWeights base(scalar(1.0), scalar(1.0 / 3.0));
        const AreSolution are = solve_are(plant, base);
        const CostWeights w = base.with_terminal(are.P_inf);
        const StabilityConstants c = stability_constants(are.P_inf, plant, w);
        SmpcConfig config;
        config.T = 0.5;
        config.tau = 0.1;
        config.h = 1e-3;
        config.t_end = 2.0;
        config.n_paths = 4000;
        config.seed = seed;
        const ControllerMode mode = ControllerMode::smpc(synthesize_schedule(plant, w, are, config.T, config.tau, config.h));
        auto run = [&](double x) {
            config.x0 = Vector::Constant(1, x);
            const PathEnsemble ens = simulate_ensemble(model, mode, config);
            BoundParams params;
            params.n_paths = ens.n_paths;
            params.n_diverged = ens.n_diverged;
            return check_theorem_bound(mean_square_curve(ens), c, are.P_inf, config.x0, Theorem::T2_3, params);
        };
        const StabilityReport local = run(0.05);
        const double rate = local.fit ? local.fit->rate : NAN;
        const bool local_ok = rate <= -c.lambda_star / 4.0 && local.violation_fraction <= 0.01;
        const StabilityReport far = run(2.0);
        const bool far_recorded = far.violation_fraction > 0.01 || far.diverged_fraction > 0.0;
        r.passed = local_ok && far_recorded;
        r.detail = "x = 0.05: rate " + fmt(rate) + " (limit " + fmt(-c.lambda_star / 4.0) + "), violations " +
                   fmt(100.0 * local.violation_fraction) + "%; x = 2: verdict " + to_string(far.verdict) +
                   ", violations " + fmt(100.0 * far.violation_fraction) + "%, diverged " +
                   fmt(100.0 * far.diverged_fraction) + "%" +
                   (far_recorded ? "" : " (neither bound violations nor divergence at x = 2)");
    });
}

CriterionResult moment_blowup(std::uint64_t seed) {
    return guarded(9, "moment blow-up", [seed](CriterionResult& r) {
        const BlowupComparison cmp = example_2_1_blowup(-48.0, seed, {100, 1000, 10000});
        auto series = [](const BlowupReport& rep) {
            std::string s;
            for (double v : rep.rows[0].estimates) s += (s.empty() ? "" : " -> ") + fmt(v);
            return s;
        };
        r.passed = cmp.nonlinear.any_flagged && !cmp.linear.any_flagged;
        r.detail = "E|b(0,u)| exponential system " + series(cmp.nonlinear) +
                   (cmp.nonlinear.any_flagged ? " (flagged)" : " (not flagged)") + "; linear plant " +
                   series(cmp.linear) + (cmp.linear.any_flagged ? " (flagged)" : " (not flagged)");
    });
}

std::vector<CriterionResult> run_all(std::uint64_t seed) {
    return {are_correctness(),      riccati_convergence(), fundamental_decay(seed),
            rhc_bound(seed),        example_2_2_loops(),   suboptimality_gap(),
            delayed_gronwall(seed), nonlinear_local_stability(seed), moment_blowup(seed)};
}

std::vector<CriterionResult> run_selftest() { return {are_correctness(), riccati_convergence(), example_2_2_loops()}; }

} // namespace smpc_lab::acceptance
