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

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "smpc_lab/core_types.hpp"
#include "smpc_lab/errors.hpp"

namespace smpc_lab::testing {

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline Vector vec1(double v) { return Vector::Constant(1, v); }

/// Linearization of the exponential system with Q = 5/2, R = 1.
inline LinearPlant ex21_plant() { return {scalar(-1.0), scalar(1.0), scalar(0.0), scalar(1.0)}; }
inline CostWeights ex21_weights(double G = 0.0) { return CostWeights(scalar(2.5), scalar(1.0), scalar(G)); }

/// Linearization of the quadratic system with Q = 1, R = 1/3.
inline LinearPlant ex22_plant() { return {scalar(1.0), scalar(-1.0), scalar(0.0), scalar(0.0)}; }
inline CostWeights ex22_weights(double G = 0.0) { return CostWeights(scalar(1.0), scalar(1.0 / 3.0), scalar(G)); }

/// Runs f and returns the library error code it throws.
template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    throw std::logic_error("expected smpc_lab::Error");
}

} // namespace smpc_lab::testing
