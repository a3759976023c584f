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

#include "smpc_lab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smpc_lab/models.hpp"

namespace smpc_lab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LineFit {
    double slope = 0.0;
    double slope_sd = 0.0;
};

// Least squares slope of v against t; values are centred first so that a
// constant shift of v leaves the slope unchanged to rounding.
LineFit fit_line(const std::vector<double>& t, const std::vector<double>& v, const std::vector<double>* sd) {
    const double n = static_cast<double>(t.size());
    const double t_mean = std::accumulate(t.begin(), t.end(), 0.0) / n;
    const double v_mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double sxx = 0.0;
    for (double ti : t) sxx += (ti - t_mean) * (ti - t_mean);
    LineFit fit;
    double var = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double w = (t[i] - t_mean) / sxx;
        fit.slope += w * (v[i] - v_mean);
        if (sd) var += w * w * (*sd)[i] * (*sd)[i];
    }
    fit.slope_sd = std::sqrt(var);
    return fit;
}

} // namespace

MeanSquareCurve mean_square_curve(const TimeGrid& grid, const MomentAccumulator& acc, std::size_t n_paths) {
    if (n_paths < 2) {
        throw Error(ErrorCode::EmptyEnsemble, "mean-square estimate needs at least two paths");
    }
    MeanSquareCurve curve;
    curve.grid = grid;
    const std::size_t n = acc.size();
    curve.estimate.resize(n);
    curve.std_error.resize(n);
    curve.n_effective.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = acc.count(i);
        curve.n_effective[i] = c;
        curve.estimate[i] = c > 0 ? std::max(0.0, acc.mean(i)) : std::numeric_limits<double>::quiet_NaN();
        curve.std_error[i] = c > 1 ? std::sqrt(acc.variance(i) / static_cast<double>(c)) : 0.0;
    }
    return curve;
}

MeanSquareCurve mean_square_curve(const PathEnsemble& ensemble) {
    return mean_square_curve(ensemble.grid, ensemble.state_sq, ensemble.n_paths);
}

MeanSquareCurve mean_square_curve(const FundamentalEnsemble& ensemble) {
    return mean_square_curve(ensemble.grid, ensemble.norm_sq, ensemble.n_paths);
}

MeanSquareCurve prediction_error_curve(const PathEnsemble& ensemble) {
    return mean_square_curve(ensemble.grid, ensemble.error_sq, ensemble.n_paths);
}

DecayFit fit_decay_rate(const MeanSquareCurve& curve, double t_a, double t_b) {
    const double tol = kGridTolerance * std::max(1.0, std::abs(t_b));
    std::vector<double> t, v, sd;
    for (std::size_t i = 0; i < curve.estimate.size(); ++i) {
        const double ti = curve.grid.t(i);
        if (ti < t_a - tol || ti > t_b + tol) continue;
        const double e = curve.estimate[i];
        if (!(e > 0.0)) {
            throw Error(ErrorCode::NonPositiveEstimate,
                        "estimate " + format_number(e) + " at t = " + format_number(ti) + " inside the fit window");
        }
        t.push_back(ti);
        v.push_back(std::log(e));
        sd.push_back(curve.std_error[i] / e);
    }
    if (t.size() < 2) {
        throw Error(ErrorCode::PreconditionViolated, "fit window holds fewer than two nodes");
    }
    const LineFit line = fit_line(t, v, &sd);
    return {line.slope, 1.96 * line.slope_sd, t.size(), t_a, t_b};
}

DecayFit fit_decay_rate(const MeanSquareCurve& curve) {
    const double t_end = curve.grid.t_end();
    return fit_decay_rate(curve, curve.grid.t0 + 0.1 * (t_end - curve.grid.t0),
                          curve.grid.t0 + 0.8 * (t_end - curve.grid.t0));
}

const char* to_string(Theorem theorem) {
    switch (theorem) {
    case Theorem::T2_1: return "T2_1";
    case Theorem::T2_2: return "T2_2";
    case Theorem::T2_3: return "T2_3";
    }
    return "unknown";
}

const char* to_string(Verdict verdict) {
    switch (verdict) {
    case Verdict::StableWithinBound: return "STABLE_WITHIN_BOUND";
    case Verdict::RateOnly: return "RATE_ONLY";
    case Verdict::BlowupSuspected: return "BLOWUP_SUSPECTED";
    }
    return "unknown";
}

Theorem theorem_from_string(const std::string& name) {
    if (name == "T2_1") return Theorem::T2_1;
    if (name == "T2_2") return Theorem::T2_2;
    if (name == "T2_3") return Theorem::T2_3;
    throw Error(ErrorCode::ValidationError, "theorem: expected T2_1, T2_2 or T2_3, got '" + name + "'");
}

double theorem_rate(const StabilityConstants& constants, Theorem theorem, const BoundParams& p) {
    switch (theorem) {
    case Theorem::T2_1: return -constants.lambda_inf;
    case Theorem::T2_3: return -0.5 * constants.lambda_star;
    case Theorem::T2_2: {
        if (!constants.K1) {
            throw Error(ErrorCode::NotDominating, "the T2_2 exponent needs K1, which requires G >= P_inf");
        }
        const double K1 = *constants.K1;
        const double ekt = std::exp(p.K * p.tau);
        return -2.0 * constants.lambda_inf +
               p.K * (p.L + p.L * ekt + p.L * p.tau * ekt +
                      (K1 + K1 * K1) * std::exp(-2.0 * constants.lambda_inf * (p.T - p.tau)));
    }
    }
    return 0.0;
}

std::vector<double> theorem_bound_curve(const TimeGrid& grid, const StabilityConstants& constants,
                                        const Matrix& P_inf, const Vector& x0, Theorem theorem,
                                        const BoundParams& params) {
    const double scale = (theorem == Theorem::T2_3 ? 2.0 : 1.0) * x0.dot(P_inf * x0) / constants.lambda_min_P;
    const double rate = theorem_rate(constants, theorem, params);
    std::vector<double> bound(grid.n_nodes());
    for (std::size_t i = 0; i < bound.size(); ++i) bound[i] = scale * std::exp(rate * grid.t(i));
    return bound;
}

StabilityReport judge_against_bound(const MeanSquareCurve& curve, std::vector<double> bound,
                                    const BoundParams& params) {
    if (bound.size() != curve.estimate.size()) {
        throw Error(ErrorCode::DimensionMismatch, "bound curve and estimate differ in length");
    }
    StabilityReport report;
    std::size_t violations = 0;
    for (std::size_t i = 0; i < bound.size(); ++i) {
        const double e = curve.estimate[i];
        if (curve.n_effective[i] == 0 || !std::isfinite(e)) {
            ++violations;
            continue;
        }
        const double rel_se = e > 0.0 ? curve.std_error[i] / e : 0.0;
        if (e > bound[i] * (1.0 + 3.0 * rel_se)) ++violations;
    }
    report.violation_fraction = bound.empty() ? 0.0 : static_cast<double>(violations) / static_cast<double>(bound.size());
    report.bound_curve = std::move(bound);
    try {
        const double t_end = curve.grid.t_end();
        report.fit = fit_decay_rate(curve, params.fit_t_a.value_or(0.1 * t_end), params.fit_t_b.value_or(0.8 * t_end));
    } catch (const Error&) {
        report.fit.reset();
    }
    report.diverged_fraction =
        params.n_paths == 0 ? 0.0 : static_cast<double>(params.n_diverged) / static_cast<double>(params.n_paths);
    if (report.diverged_fraction > 0.01) {
        report.verdict = Verdict::BlowupSuspected;
    } else if (report.violation_fraction <= 0.01) {
        report.verdict = Verdict::StableWithinBound;
    } else if (report.fit && report.fit->rate < 0.0) {
        report.verdict = Verdict::RateOnly;
    } else {
        report.verdict = Verdict::BlowupSuspected;
    }
    return report;
}

StabilityReport check_theorem_bound(const MeanSquareCurve& curve, const StabilityConstants& constants,
                                    const Matrix& P_inf, const Vector& x0, Theorem theorem,
                                    const BoundParams& params) {
    StabilityReport report =
        judge_against_bound(curve, theorem_bound_curve(curve.grid, constants, P_inf, x0, theorem, params), params);
    report.theorem = theorem;
    report.bound_rate = theorem_rate(constants, theorem, params);
    report.constants_used = constants;
    return report;
}

CostEstimate cost_lyapunov_linear(const LinearPlant& plant, const CostWeights& weights, const GainSchedule& gains,
                                  const Vector& x0, double horizon) {
    validate_plant(plant);
    weights.check_compatible(plant);
    if (x0.size() != plant.n()) throw Error(ErrorCode::DimensionMismatch, "x0 does not match the plant");
    const double h = gains.h;
    const std::size_t n_steps = whole_steps(horizon, h, "horizon");
    const std::size_t n_c = gains.steps_per_cycle();

    struct Closed {
        Matrix A, C, W;
    };
    auto close = [&](const Matrix& theta) {
        return Closed{plant.A + plant.B * theta, plant.C + plant.D * theta,
                      weights.Q() + theta.transpose() * weights.R() * theta};
    };
    std::vector<Closed> nodes, mids;
    for (std::size_t j = 0; j <= n_c; ++j) nodes.push_back(close(gains.theta[j]));
    for (std::size_t j = 0; j < n_c; ++j) mids.push_back(close(0.5 * (gains.theta[j] + gains.theta[j + 1])));

    auto rhs = [](const Closed& c, const Matrix& M) -> Matrix {
        return c.A * M + M * c.A.transpose() + c.C * M * c.C.transpose();
    };
    auto stage = [](const Closed& c, const Matrix& M) { return 0.5 * (c.W * M).trace(); };

    CostEstimate est;
    est.method = CostMethod::LyapunovDeterministic;
    est.truncation_horizon = horizon;
    Matrix M = x0 * x0.transpose();
    if (x0.isZero(0.0)) return est;

    std::vector<double> t_boundary, log_trace;
    for (std::size_t i = 0; i < n_steps; ++i) {
        const std::size_t j = i % n_c;
        const Closed& a = nodes[j];
        const Closed& m = mids[j];
        const Closed& b = nodes[j + 1];
        const Matrix k1 = rhs(a, M);
        const Matrix M2 = M + 0.5 * h * k1;
        const Matrix k2 = rhs(m, M2);
        const Matrix M3 = M + 0.5 * h * k2;
        const Matrix k3 = rhs(m, M3);
        const Matrix M4 = M + h * k3;
        const Matrix k4 = rhs(b, M4);
        est.value += h / 6.0 * (stage(a, M) + 2.0 * stage(m, M2) + 2.0 * stage(m, M3) + stage(b, M4));
        M = symmetrize(M + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        if (!M.allFinite()) throw Error(ErrorCode::UnstableClosedLoop, "second moment became non-finite");
        const double t = static_cast<double>(i + 1) * h;
        if ((i + 1) % n_c == 0 && t >= 0.5 * horizon) {
            t_boundary.push_back(t);
            log_trace.push_back(std::log(std::max(M.trace(), std::numeric_limits<double>::min())));
        }
    }
    if (t_boundary.size() < 2) {
        throw Error(ErrorCode::PreconditionViolated, "cost horizon must span at least four control cycles");
    }
    const double slope = fit_line(t_boundary, log_trace, nullptr).slope;
    if (!(slope < 0.0)) {
        throw Error(ErrorCode::UnstableClosedLoop, "second moment does not decay (fitted rate " + format_number(slope) + ")");
    }
    est.tail_bound = stage(nodes[n_steps % n_c], M) * std::exp(-slope * gains.tau) / -slope;
    return est;
}

CostEstimate cost_monte_carlo(const PathEnsemble& ensemble, const CostWeights& weights, const Matrix& theta_inf) {
    if (ensemble.cost.size() != 1 || ensemble.cost.count(0) < 2) {
        throw Error(ErrorCode::EmptyEnsemble, "ensemble carries no per-path costs");
    }
    CostEstimate est;
    est.method = CostMethod::MonteCarloTruncated;
    est.value = ensemble.cost.mean(0);
    est.std_error = std::sqrt(ensemble.cost.variance(0) / static_cast<double>(ensemble.cost.count(0)));
    est.truncation_horizon = ensemble.grid.t_end();
    const MeanSquareCurve curve = mean_square_curve(ensemble);
    try {
        const double rate = fit_decay_rate(curve).rate;
        const double weight = lambda_max(weights.Q()) + lambda_max(theta_inf.transpose() * weights.R() * theta_inf);
        est.tail_bound = rate < 0.0 ? 0.5 * weight * curve.estimate.back() / -rate : kInf;
    } catch (const Error&) {
        est.tail_bound = kInf;
    }
    return est;
}

GapStudy suboptimality_gap_study(const LinearPlant& plant, const CostWeights& weights,
                                 const std::vector<double>& gaps, double tau, const Vector& x0, double h,
                                 double horizon) {
    const AreSolution are = solve_are(plant, weights);
    GapStudy study;
    study.optimal_cost = 0.5 * x0.dot(are.P_inf * x0);
    study.nonnegative = true;
    study.decreasing = true;
    for (double gap : gaps) {
        const GainSchedule schedule = synthesize_schedule(plant, weights, are, tau + gap, tau, h);
        const double cost = cost_lyapunov_linear(plant, weights, schedule, x0, horizon).value;
        GapRow row{gap, cost, cost - study.optimal_cost};
        if (row.value < -1e-10) study.nonnegative = false;
        if (!study.rows.empty() && !(row.value < study.rows.back().value)) study.decreasing = false;
        study.rows.push_back(row);
    }
    if (study.rows.size() >= 2) {
        const GapRow& a = study.rows[study.rows.size() - 2];
        const GapRow& b = study.rows.back();
        if (a.value > 0.0 && b.value > 0.0) {
            study.last_slope = (std::log(b.value) - std::log(a.value)) / (b.gap - a.gap);
        }
    }
    return study;
}

LipschitzSweep lipschitz_sweep(const LinearPlant& plant, const CostWeights& weights, const SmpcConfig& config,
                               const std::vector<double>& margins) {
    const AreSolution are = solve_are(plant, weights);
    const ControllerMode mode =
        ControllerMode::smpc(synthesize_schedule(plant, weights, are, config.T, config.tau, config.h));
    LipschitzSweep sweep;
    sweep.rate_monotone = true;
    for (double L : margins) {
        const PathEnsemble ens = simulate_ensemble(models::perturbed_linear(plant, L), mode, config);
        LipschitzRow row;
        row.L = L;
        row.diverged_fraction = ens.diverged_fraction();
        const MeanSquareCurve err = prediction_error_curve(ens);
        for (double e : err.estimate) {
            if (std::isfinite(e)) row.max_error_sq = std::max(row.max_error_sq, e);
        }
        try {
            row.fitted_rate = fit_decay_rate(mean_square_curve(ens)).rate;
        } catch (const Error&) {
            row.fitted_rate.reset();
        }
        if (!sweep.rows.empty()) {
            const LipschitzRow& prev = sweep.rows.back();
            if (!row.fitted_rate || !prev.fitted_rate || *row.fitted_rate < *prev.fitted_rate) {
                sweep.rate_monotone = false;
            }
        }
        sweep.rows.push_back(row);
    }
    if (sweep.rows.size() >= 2) {
        const LipschitzRow& a = sweep.rows.front();
        const LipschitzRow& b = sweep.rows.back();
        if (a.max_error_sq > 0.0 && b.max_error_sq > 0.0 && a.L > 0.0 && b.L > a.L) {
            sweep.error_order = std::log(b.max_error_sq / a.max_error_sq) / std::log(b.L / a.L);
        }
    }
    return sweep;
}

const char* to_string(ProbeObservable observable) {
    switch (observable) {
    case ProbeObservable::ControlDrift: return "control_drift";
    case ProbeObservable::DriftNorm: return "drift_norm";
    case ProbeObservable::StateNorm: return "state_norm";
    }
    return "unknown";
}

BlowupReport blowup_probe(const NonlinearModel& model, const ControllerMode& mode, const SmpcConfig& config,
                          double probe_time, const std::vector<ProbeRequest>& requests,
                          const std::vector<std::size_t>& sizes) {
    if (sizes.empty() || !std::is_sorted(sizes.begin(), sizes.end()) || sizes.front() == 0) {
        throw Error(ErrorCode::ValidationError, "sizes: need a non-empty increasing list of positive sizes");
    }
    SmpcConfig c = config;
    c.t_end = probe_time;
    c.n_paths = sizes.back();
    SimulationOptions options;
    options.probe_time = probe_time;
    const PathEnsemble ens = simulate_ensemble(model, mode, c, options);

    const Eigen::Index n = model.linearization.n();
    Vector zero = Vector::Zero(n);
    Vector drift(n);
    BlowupReport report;
    report.probe_time = probe_time;
    for (const ProbeRequest& req : requests) {
        BlowupRow row;
        row.request = req;
        row.sizes = sizes;
        double sum = 0.0;
        std::size_t next = 0;
        for (std::size_t p = 0; p < ens.probe.size() && next < sizes.size(); ++p) {
            const ProbeSample& s = ens.probe[p];
            double base = kInf;
            if (s.y.allFinite() && s.u.allFinite()) {
                switch (req.observable) {
                case ProbeObservable::ControlDrift:
                    model.drift(zero, s.u, drift);
                    base = drift.norm();
                    break;
                case ProbeObservable::DriftNorm:
                    model.drift(s.y, s.u, drift);
                    base = drift.norm();
                    break;
                case ProbeObservable::StateNorm:
                    base = s.y.norm();
                    break;
                }
            }
            const double v = std::isfinite(base) ? std::pow(base, req.order) : kInf;
            sum += std::isnan(v) ? kInf : v;
            if (p + 1 == sizes[next]) {
                row.estimates.push_back(sum / static_cast<double>(p + 1));
                ++next;
            }
        }
        for (std::size_t k = 0; k < row.estimates.size(); ++k) {
            const double e = row.estimates[k];
            if (!std::isfinite(e)) row.flagged = true;
            if (k == 0) continue;
            const double prev = row.estimates[k - 1];
            const double ratio = prev > 0.0 ? e / prev : (e > 0.0 ? kInf : 1.0);
            row.ratios.push_back(ratio);
            if (!(ratio <= 2.0)) row.flagged = true;
        }
        report.any_flagged = report.any_flagged || row.flagged;
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace smpc_lab
