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

#pragma once

#include <cstddef>
#include <vector>

#include "smpc_lab/core_types.hpp"
#include "smpc_lab/riccati.hpp"

namespace smpc_lab {

/// Feedback gains Theta(s) = K(Sigma(T - s)) sampled at s_i = i h, i = 0..N_c,
/// together with the stationary gain Theta_inf = K(P_inf).
struct GainSchedule {
    std::vector<Matrix> theta;
    Matrix theta_inf;
    double T = 0.0;
    double tau = 0.0;
    double h = 0.0;

    std::size_t steps_per_cycle() const { return theta.empty() ? 0 : theta.size() - 1; }
    const Matrix& at_node(std::size_t i) const { return theta.at(i); }
    /// Left-continuous piecewise constant lookup; throws OutOfCycle outside [0, tau].
    const Matrix& at(double s) const;
};

/// Samples the schedule from a forward Riccati solution. Throws
/// HorizonExceedsRiccati when T lies beyond the solution grid and InvalidGrid
/// when T or tau are off the grid.
GainSchedule build_gain_schedule(const RiccatiSolution& riccati, const AreSolution& are, double T, double tau);

/// Same schedule computed from the backward equation for P_T.
GainSchedule schedule_from_dre(const LinearPlant& plant, const CostWeights& weights, const AreSolution& are,
                               double T, double tau, double h);

/// Schedule holding the same gain at every node (Theta_inf = theta).
GainSchedule constant_schedule(const Matrix& theta, double tau, double h);

/// Convenience: integrates Sigma over [0, T] with step h and samples it.
GainSchedule synthesize_schedule(const LinearPlant& plant, const CostWeights& weights, const AreSolution& are,
                                 double T, double tau, double h);

struct DeviationRow {
    double s = 0.0;
    double deviation = 0.0;   ///< |Theta(s) - Theta_inf|
};

struct DeviationTable {
    std::vector<DeviationRow> rows;
    double max_deviation = 0.0;
    double reference = 0.0;   ///< K1 e^{-2 lambda_inf (T - tau)}
};

DeviationTable theta_deviation_bound(const GainSchedule& schedule, const StabilityConstants& constants, double K1);

struct DeviationStudyRow {
    double gap = 0.0;   ///< T - tau
    DeviationTable table;
};

struct DeviationStudy {
    std::vector<DeviationStudyRow> rows;
    bool decreasing = false;   ///< max deviation strictly decreasing in T - tau
};

/// Rebuilds the schedule for each horizon gap (T = tau + gap) and tabulates
/// the deviation from Theta_inf. Needs G >= P_inf and at least three gaps.
DeviationStudy theta_deviation_study(const LinearPlant& plant, const CostWeights& weights, const AreSolution& are,
                                     double tau, const std::vector<double>& gaps, double h);

enum class ControllerKind {
    Smpc,       ///< nonlinear system, scheduled gain on the reset plant prediction
    Rhc,        ///< same law with the linear plant as the physical system
    StaticAre,  ///< u = Theta_inf y
    OpenLoop,   ///< u = Theta_inf x_pred with the prediction never reset after t = 0
};

const char* to_string(ControllerKind kind);

struct ControllerMode {
    ControllerKind kind = ControllerKind::Smpc;
    GainSchedule schedule;   ///< Theta_inf, tau and h are always meaningful

    static ControllerMode smpc(GainSchedule schedule) { return {ControllerKind::Smpc, std::move(schedule)}; }
    static ControllerMode rhc(GainSchedule schedule) { return {ControllerKind::Rhc, std::move(schedule)}; }
    static ControllerMode static_are(GainSchedule schedule) {
        return {ControllerKind::StaticAre, std::move(schedule)};
    }
    static ControllerMode open_loop(GainSchedule schedule) {
        return {ControllerKind::OpenLoop, std::move(schedule)};
    }

    bool uses_schedule() const { return kind == ControllerKind::Smpc || kind == ControllerKind::Rhc; }
    /// Gain multiplying the state fed to the controller at in-cycle node i.
    const Matrix& gain_at_node(std::size_t i) const {
        return uses_schedule() ? schedule.theta[i] : schedule.theta_inf;
    }
};

/// Control applied at in-cycle time s: Theta(s) x_pred for Smpc/Rhc,
/// Theta_inf y for StaticAre and Theta_inf x_pred for OpenLoop.
/// Throws OutOfCycle when s lies outside [0, tau].
Vector control_at(const ControllerMode& mode, double s_in_cycle, const Vector& x_pred, const Vector& y);

} // namespace smpc_lab
