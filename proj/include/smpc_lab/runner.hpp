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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smpc_lab/analysis.hpp"
#include "smpc_lab/riccati.hpp"
#include "smpc_lab/scenario.hpp"

namespace smpc_lab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// 2 for parse/validation problems, 3 for numerical failures.
int exit_code_for(const Error& error);

/// %.17g; non-finite values print as nan / inf.
std::string format_full(double v);

/// Columns t, ms_estimate, ms_stderr, bound, n_effective; one row per node.
void write_mean_square_csv(const std::string& path, const MeanSquareCurve& curve, const std::vector<double>& bound);
/// Columns t, sigma_gap, k1_bound (nan when no bound applies); one row per node.
void write_riccati_csv(const std::string& path, const ConvergenceReport& report);

struct RunOutcome {
    int exit_code = kExitOk;
    std::vector<std::string> failed_checks;
};

/// Full pipeline: ARE, Riccati convergence, gain schedule, ensemble and the
/// requested analyses. Writes mean_square.csv, riccati_convergence.csv,
/// stability_report.txt and summary.json into scenario.output_dir.
RunOutcome run_scenario(const Scenario& scenario, std::ostream& log);

/// Simulation only: mean_square.csv with the T2_1 bound and summary.json.
RunOutcome simulate_scenario(const Scenario& scenario, std::ostream& log);

struct ClosedLoopReproduction {
    TimeGrid grid;
    std::vector<double> y;
    std::vector<double> analytic;
    double max_abs_error = 0.0;
};

/// Quadratic system under u = Theta_inf y from x; compared with
/// 4x / (x - (x - 4) e^{2t}).
ClosedLoopReproduction example_2_2_closed_loop(double x, double h, double t_end);

struct OpenLoopReproduction {
    TimeGrid grid;
    std::vector<double> y;
    std::optional<double> exit_time;   ///< first t with |Y| >= radius
};

/// Quadratic system under the open-loop optimal control of the linear plant.
OpenLoopReproduction example_2_2_open_loop(double x, double h, double t_end, double radius);

struct BlowupComparison {
    BlowupReport nonlinear;
    BlowupReport linear;
};

/// Control-drift probe for the exponential system and for its linearization
/// under the same SMPC configuration.
BlowupComparison example_2_1_blowup(double x, std::uint64_t seed, const std::vector<std::size_t>& sizes);

/// The bundled exponential-system scenario document.
const std::string& example_2_1_scenario_text();

std::vector<std::string> reproduce_ids();
RunOutcome reproduce(const std::string& id, const std::string& out_dir, std::optional<std::uint64_t> seed,
                     std::ostream& log);

} // namespace smpc_lab
