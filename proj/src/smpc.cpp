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

#include "smpc_lab/smpc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace smpc_lab {

namespace {

void check_cycle(double s, double tau) {
    const double tol = kGridTolerance * std::max(1.0, tau);
    if (!(s >= -tol && s <= tau + tol)) {
        throw Error(ErrorCode::OutOfCycle,
                    "in-cycle time " + format_number(s) + " outside [0, " + format_number(tau) + "]");
    }
}

void check_horizons(double T, double tau) {
    if (!(tau > 0.0) || !(T >= tau)) {
        throw Error(ErrorCode::ValidationError, "tau: need 0 < tau <= T");
    }
}

} // namespace

const Matrix& GainSchedule::at(double s) const {
    check_cycle(s, tau);
    const double x = s / h;
    const double nearest = std::round(x);
    std::size_t i = std::abs(x - nearest) <= kGridTolerance * std::max(1.0, nearest)
                        ? static_cast<std::size_t>(std::max(0.0, nearest))
                        : static_cast<std::size_t>(std::ceil(x));
    if (i >= theta.size()) i = theta.size() - 1;
    return theta[i];
}

GainSchedule build_gain_schedule(const RiccatiSolution& riccati, const AreSolution& are, double T, double tau) {
    check_horizons(T, tau);
    if (T > riccati.horizon() * (1.0 + kGridTolerance)) {
        throw Error(ErrorCode::HorizonExceedsRiccati, "prediction horizon " + format_number(T) +
                                                          " beyond Riccati horizon " +
                                                          format_number(riccati.horizon()));
    }
    const double h = riccati.grid.h;
    const std::size_t n_T = riccati.grid.index_of(T);
    const std::size_t n_c = whole_steps(tau, h, "tau");

    GainSchedule schedule;
    schedule.T = T;
    schedule.tau = tau;
    schedule.h = h;
    schedule.theta.reserve(n_c + 1);
    for (std::size_t i = 0; i <= n_c; ++i) {
        schedule.theta.push_back(op_K(riccati.sigma[n_T - i], riccati.plant, riccati.weights));
    }
    schedule.theta_inf = op_K(are.P_inf, riccati.plant, riccati.weights);
    return schedule;
}

GainSchedule schedule_from_dre(const LinearPlant& plant, const CostWeights& weights, const AreSolution& are,
                               double T, double tau, double h) {
    check_horizons(T, tau);
    const std::vector<Matrix> p = integrate_dre_backward(plant, weights, T, h);
    const std::size_t n_c = whole_steps(tau, h, "tau");
    GainSchedule schedule;
    schedule.T = T;
    schedule.tau = tau;
    schedule.h = h;
    for (std::size_t i = 0; i <= n_c; ++i) schedule.theta.push_back(op_K(p[i], plant, weights));
    schedule.theta_inf = op_K(are.P_inf, plant, weights);
    return schedule;
}

GainSchedule constant_schedule(const Matrix& theta, double tau, double h) {
    GainSchedule schedule;
    schedule.T = tau;
    schedule.tau = tau;
    schedule.h = h;
    schedule.theta.assign(whole_steps(tau, h, "tau") + 1, theta);
    schedule.theta_inf = theta;
    return schedule;
}

GainSchedule synthesize_schedule(const LinearPlant& plant, const CostWeights& weights, const AreSolution& are,
                                 double T, double tau, double h) {
    check_horizons(T, tau);
    return build_gain_schedule(integrate_riccati(plant, weights, T, h), are, T, tau);
}

DeviationTable theta_deviation_bound(const GainSchedule& schedule, const StabilityConstants& constants,
                                     double K1) {
    DeviationTable table;
    table.reference = K1 * std::exp(-2.0 * constants.lambda_inf * (schedule.T - schedule.tau));
    for (std::size_t i = 0; i < schedule.theta.size(); ++i) {
        const double d = spectral_norm(schedule.theta[i] - schedule.theta_inf);
        table.rows.push_back({static_cast<double>(i) * schedule.h, d});
        table.max_deviation = std::max(table.max_deviation, d);
    }
    return table;
}

DeviationStudy theta_deviation_study(const LinearPlant& plant, const CostWeights& weights, const AreSolution& are,
                                     double tau, const std::vector<double>& gaps, double h) {
    if (gaps.size() < 3) {
        throw Error(ErrorCode::PreconditionViolated, "deviation study needs at least three horizon gaps");
    }
    const StabilityConstants constants = stability_constants(are.P_inf, plant, weights);
    const double K1 = k1_dominating(weights.G(), are.P_inf);
    DeviationStudy study;
    study.decreasing = true;
    for (double gap : gaps) {
        const GainSchedule schedule = synthesize_schedule(plant, weights, are, tau + gap, tau, h);
        DeviationStudyRow row{gap, theta_deviation_bound(schedule, constants, K1)};
        if (!study.rows.empty()) {
            const DeviationStudyRow& prev = study.rows.back();
            if (!(gap > prev.gap && row.table.max_deviation < prev.table.max_deviation)) study.decreasing = false;
        }
        study.rows.push_back(std::move(row));
    }
    return study;
}

const char* to_string(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::Smpc: return "smpc";
    case ControllerKind::Rhc: return "rhc";
    case ControllerKind::StaticAre: return "static_are";
    case ControllerKind::OpenLoop: return "open_loop";
    }
    return "unknown";
}

Vector control_at(const ControllerMode& mode, double s_in_cycle, const Vector& x_pred, const Vector& y) {
    switch (mode.kind) {
    case ControllerKind::Smpc:
    case ControllerKind::Rhc:
        return mode.schedule.at(s_in_cycle) * x_pred;
    case ControllerKind::StaticAre:
        return mode.schedule.theta_inf * y;
    case ControllerKind::OpenLoop:
        return mode.schedule.theta_inf * x_pred;
    }
    return Vector();
}

} // namespace smpc_lab
