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

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smpc_lab/analysis.hpp"
#include "smpc_lab/core_types.hpp"
#include "smpc_lab/smpc.hpp"

namespace smpc_lab {

/// Built-in model together with the weights it is usually studied with.
struct RegisteredModel {
    std::string name;
    NonlinearModel model;
    Matrix Q;
    Matrix R;
};

/// "example_2_1" (exponential system) or "example_2_2" (quadratic system);
/// throws ValidationError for anything else.
RegisteredModel registered_model(const std::string& name);
std::vector<std::string> registered_model_names();

struct MeanSquareAnalysis {
    Theorem theorem = Theorem::T2_1;
    double K = 1.0;
    double L = 0.0;
    std::optional<double> fit_t_a;
    std::optional<double> fit_t_b;
    std::optional<Verdict> require_verdict;
    std::optional<double> require_rate_at_most;
};

struct RiccatiAnalysis {
    double horizon = 5.0;
    bool require_bound = false;
};

struct CostAnalysis {
    double horizon = 20.0;
    bool monte_carlo = false;
};

struct GapAnalysis {
    std::vector<double> gaps;
    bool require_decreasing = false;
};

struct BlowupAnalysis {
    double probe_time = 0.0;
    std::vector<ProbeRequest> requests{ProbeRequest{}};
    std::vector<std::size_t> sizes{100, 1000, 10000};
    std::optional<bool> expect_flag;
};

using AnalysisRequest = std::variant<MeanSquareAnalysis, RiccatiAnalysis, CostAnalysis, GapAnalysis, BlowupAnalysis>;

struct Scenario {
    std::string name;
    std::string model_type;
    NonlinearModel model;
    Matrix Q;
    Matrix R;
    std::optional<Matrix> G;   ///< empty means G = P_inf
    SmpcConfig smpc;
    ControllerKind mode = ControllerKind::Smpc;
    std::optional<double> exit_radius;
    std::vector<AnalysisRequest> analyses;
    std::string output_dir;

    /// Weights with G resolved (P_inf substituted when requested).
    CostWeights weights(const Matrix& P_inf) const;
};

/// Parses and validates a scenario document. Throws ParseError (with line
/// and column), UnknownKey or ValidationError naming the offending field.
Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario(const std::string& path);

struct ScenarioOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<double> h;
    std::optional<std::string> out;
};

/// Applies command-line overrides and re-validates the grid.
void apply_overrides(Scenario& scenario, const ScenarioOverrides& overrides);

ControllerKind controller_kind_from_string(const std::string& name);

} // namespace smpc_lab
