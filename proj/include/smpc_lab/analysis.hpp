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
#include <optional>
#include <string>
#include <vector>

#include "smpc_lab/core_types.hpp"
#include "smpc_lab/riccati.hpp"
#include "smpc_lab/sde_engine.hpp"
#include "smpc_lab/smpc.hpp"

namespace smpc_lab {

struct MeanSquareCurve {
    TimeGrid grid;
    std::vector<double> estimate;
    std::vector<double> std_error;
    std::vector<std::size_t> n_effective;
};

/// Sample mean and standard error of |Y(t)|^2; throws EmptyEnsemble below two paths.
MeanSquareCurve mean_square_curve(const PathEnsemble& ensemble);
/// Same for |Phi(t)|^2.
MeanSquareCurve mean_square_curve(const FundamentalEnsemble& ensemble);
MeanSquareCurve mean_square_curve(const TimeGrid& grid, const MomentAccumulator& acc, std::size_t n_paths);
/// Mean square prediction error E|eps(t)|^2.
MeanSquareCurve prediction_error_curve(const PathEnsemble& ensemble);

struct DecayFit {
    double rate = 0.0;             ///< slope of log(estimate) against t
    double ci_half_width = 0.0;    ///< 95% half width from the per-node standard errors
    std::size_t n_points = 0;
    double t_a = 0.0;
    double t_b = 0.0;
};

/// Least squares on log(estimate) over nodes in [t_a, t_b]. Throws
/// NonPositiveEstimate when an estimate in the window is not positive.
DecayFit fit_decay_rate(const MeanSquareCurve& curve, double t_a, double t_b);
/// Window [0.1 t_end, 0.8 t_end].
DecayFit fit_decay_rate(const MeanSquareCurve& curve);

enum class Theorem { T2_1, T2_2, T2_3 };
enum class Verdict { StableWithinBound, RateOnly, BlowupSuspected };

const char* to_string(Theorem theorem);
const char* to_string(Verdict verdict);
Theorem theorem_from_string(const std::string& name);

struct BoundParams {
    double K = 1.0;   ///< generic constant in the T2_2 exponent
    double L = 0.0;   ///< Lipschitz margin of the model error (T2_2)
    double T = 0.0;   ///< prediction horizon (T2_2)
    double tau = 0.0; ///< control horizon (T2_2)
    std::optional<double> fit_t_a;
    std::optional<double> fit_t_b;
    std::size_t n_paths = 0;
    std::size_t n_diverged = 0;
};

/// Decay exponent of the selected bound: -lambda_inf (T2_1), mu (T2_2) or
/// -lambda_star / 2 (T2_3).
double theorem_rate(const StabilityConstants& constants, Theorem theorem, const BoundParams& params);

/// Bound curve c <P_inf x, x> / lmin(P_inf) e^{rate t} with c = 2 for T2_3 and 1 otherwise.
std::vector<double> theorem_bound_curve(const TimeGrid& grid, const StabilityConstants& constants,
                                        const Matrix& P_inf, const Vector& x0, Theorem theorem,
                                        const BoundParams& params);

struct StabilityReport {
    Theorem theorem = Theorem::T2_1;
    std::optional<DecayFit> fit;
    double bound_rate = 0.0;
    std::vector<double> bound_curve;
    double violation_fraction = 0.0;
    double diverged_fraction = 0.0;
    Verdict verdict = Verdict::BlowupSuspected;
    StabilityConstants constants_used;
};

/// A node violates the bound when estimate > bound (1 + 3 SE / estimate).
/// Verdict, in order: more than 1% diverged paths -> BlowupSuspected; at most
/// 1% violating nodes -> StableWithinBound; negative fitted rate -> RateOnly;
/// otherwise BlowupSuspected.
StabilityReport check_theorem_bound(const MeanSquareCurve& curve, const StabilityConstants& constants,
                                    const Matrix& P_inf, const Vector& x0, Theorem theorem,
                                    const BoundParams& params);

/// Verdict rules of check_theorem_bound applied to an explicit bound curve.
StabilityReport judge_against_bound(const MeanSquareCurve& curve, std::vector<double> bound,
                                    const BoundParams& params);

enum class CostMethod { MonteCarloTruncated, LyapunovDeterministic };

struct CostEstimate {
    double value = 0.0;
    CostMethod method = CostMethod::LyapunovDeterministic;
    double truncation_horizon = 0.0;
    double tail_bound = 0.0;
    double std_error = 0.0;   ///< Monte Carlo only
};

/// J = 1/2 int_0^H trace((Q + Theta'R Theta) M) dt with the second moment
/// M' = A(t) M + M A(t)' + C(t) M C(t)', A(t) = A + B Theta(t mod tau),
/// C(t) = C + D Theta(t mod tau), integrated by RK4 on the schedule grid.
/// Throws UnstableClosedLoop when trace(M) does not decay.
CostEstimate cost_lyapunov_linear(const LinearPlant& plant, const CostWeights& weights, const GainSchedule& gains,
                                  const Vector& x0, double horizon);

/// Mean of the per-path truncated costs of an ensemble simulated with cost weights.
CostEstimate cost_monte_carlo(const PathEnsemble& ensemble, const CostWeights& weights, const Matrix& theta_inf);

struct GapRow {
    double gap = 0.0;   ///< T - tau
    double cost = 0.0;
    double value = 0.0; ///< cost - 1/2 <P_inf x0, x0>
};

struct GapStudy {
    std::vector<GapRow> rows;
    double optimal_cost = 0.0;
    bool nonnegative = false;
    bool decreasing = false;
    std::optional<double> last_slope;   ///< log-gap slope between the two largest gaps
};

/// Receding-horizon cost of the linear closed loop for each T = tau + gap,
/// compared with the infinite-horizon value.
GapStudy suboptimality_gap_study(const LinearPlant& plant, const CostWeights& weights,
                                 const std::vector<double>& gaps, double tau, const Vector& x0, double h,
                                 double horizon);

struct LipschitzRow {
    double L = 0.0;
    double max_error_sq = 0.0;   ///< max_t E|eps(t)|^2
    std::optional<double> fitted_rate;
    double diverged_fraction = 0.0;
};

struct LipschitzSweep {
    std::vector<LipschitzRow> rows;
    bool rate_monotone = false;        ///< fitted rate non-decreasing in L
    std::optional<double> error_order; ///< log-log slope of max E|eps|^2 between the extreme L
};

/// SMPC on the plant perturbed by L tanh(Y) for each L.
LipschitzSweep lipschitz_sweep(const LinearPlant& plant, const CostWeights& weights, const SmpcConfig& config,
                               const std::vector<double>& margins);

enum class ProbeObservable {
    ControlDrift,   ///< |b(0, u)|^p
    DriftNorm,      ///< |b(y, u)|^p
    StateNorm,      ///< |y|^p
};

const char* to_string(ProbeObservable observable);

struct ProbeRequest {
    ProbeObservable observable = ProbeObservable::ControlDrift;
    double order = 1.0;
};

struct BlowupRow {
    ProbeRequest request;
    std::vector<std::size_t> sizes;
    std::vector<double> estimates;   ///< +inf when a sample in the prefix is not finite
    std::vector<double> ratios;
    bool flagged = false;
};

struct BlowupReport {
    double probe_time = 0.0;
    std::vector<BlowupRow> rows;
    bool any_flagged = false;
};

/// Empirical moments at probe_time over nested prefixes of one ensemble of
/// max(sizes) paths; a ratio above 2 between successive prefixes flags growth.
BlowupReport blowup_probe(const NonlinearModel& model, const ControllerMode& mode, const SmpcConfig& config,
                          double probe_time, const std::vector<ProbeRequest>& requests,
                          const std::vector<std::size_t>& sizes = {100, 1000, 10000});

} // namespace smpc_lab
