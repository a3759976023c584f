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
#include <string>
#include <vector>

namespace smpc_lab::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

/// "PASS  3 fundamental-solution decay: <detail>"
std::string format(const CriterionResult& result);

CriterionResult are_correctness();
CriterionResult riccati_convergence();
CriterionResult fundamental_decay(std::uint64_t seed);
CriterionResult rhc_bound(std::uint64_t seed);
CriterionResult example_2_2_loops();
CriterionResult suboptimality_gap();
CriterionResult delayed_gronwall(std::uint64_t seed);
CriterionResult nonlinear_local_stability(std::uint64_t seed);
CriterionResult moment_blowup(std::uint64_t seed);

/// Criteria 1 to 9 in order.
std::vector<CriterionResult> run_all(std::uint64_t seed);
/// Criteria 1, 2 and 5 (deterministic).
std::vector<CriterionResult> run_selftest();

/// Sigma(t) for the exponential-system plant with Q = 5/2, R = 1 and
/// Sigma(0) = s0 > 1, from the implicit closed-form solution of the scalar
/// Riccati equation inverted by bisection.
double example_2_1_sigma_closed_form(double s0, double t);

} // namespace smpc_lab::acceptance
