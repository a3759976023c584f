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

#include <string>
#include <vector>

#include "smpc_lab/core_types.hpp"

namespace smpc_lab::models {

/// b = AY + Bu, sigma = CY + Du.
NonlinearModel linear(const LinearPlant& plant);

/// Scalar system b = e^{-Y} + e^{u} - 2, sigma = e^{u} - 1 (exponential growth in u).
NonlinearModel exponential_example();

/// Scalar system b = Y + Y^2/2 - u, sigma = 0.
NonlinearModel quadratic_example();

/// Scalar polynomial model: drift = sum_ij drift[i][j] Y^i u^j, likewise for
/// the diffusion. The constant coefficient must be zero.
NonlinearModel polynomial(const std::vector<std::vector<double>>& drift,
                          const std::vector<std::vector<double>>& diffusion);

/// Linear plant plus a Lipschitz perturbation L tanh(Y) (componentwise) in
/// both drift and diffusion; the plant model stays the unperturbed plant.
NonlinearModel perturbed_linear(const LinearPlant& plant, double lipschitz);

LinearPlant exponential_example_plant();
LinearPlant quadratic_example_plant();

} // namespace smpc_lab::models
