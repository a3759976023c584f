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

#include "smpc_lab/models.hpp"

#include <cmath>

namespace smpc_lab::models {

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

double coefficient(const std::vector<std::vector<double>>& c, std::size_t i, std::size_t j) {
    if (i >= c.size() || j >= c[i].size()) return 0.0;
    return c[i][j];
}

double eval_poly(const std::vector<std::vector<double>>& c, double y, double u) {
    double total = 0.0;
    double y_pow = 1.0;
    for (const auto& row : c) {
        double u_pow = 1.0;
        for (double a : row) {
            total += a * y_pow * u_pow;
            u_pow *= u;
        }
        y_pow *= y;
    }
    return total;
}

} // namespace

NonlinearModel linear(const LinearPlant& plant) {
    validate_plant(plant);
    NonlinearModel model;
    model.drift = [A = plant.A, B = plant.B](const Vector& y, const Vector& u, Vector& out) {
        out.noalias() = A * y;
        out.noalias() += B * u;
    };
    model.diffusion = [C = plant.C, D = plant.D](const Vector& y, const Vector& u, Vector& out) {
        out.noalias() = C * y;
        out.noalias() += D * u;
    };
    model.linearization = plant;
    model.growth_order = 1;
    model.lipschitz_margin = 0.0;
    return model;
}

LinearPlant exponential_example_plant() {
    return {scalar(-1.0), scalar(1.0), scalar(0.0), scalar(1.0)};
}

LinearPlant quadratic_example_plant() {
    return {scalar(1.0), scalar(-1.0), scalar(0.0), scalar(0.0)};
}

NonlinearModel exponential_example() {
    NonlinearModel model;
    model.drift = [](const Vector& y, const Vector& u, Vector& out) {
        out.resize(1);
        out(0) = std::exp(-y(0)) + std::exp(u(0)) - 2.0;
    };
    model.diffusion = [](const Vector&, const Vector& u, Vector& out) {
        out.resize(1);
        out(0) = std::exp(u(0)) - 1.0;
    };
    model.linearization = exponential_example_plant();
    return model;
}

NonlinearModel quadratic_example() {
    NonlinearModel model;
    model.drift = [](const Vector& y, const Vector& u, Vector& out) {
        out.resize(1);
        out(0) = y(0) + 0.5 * y(0) * y(0) - u(0);
    };
    model.diffusion = [](const Vector&, const Vector&, Vector& out) { out.setZero(1); };
    model.linearization = quadratic_example_plant();
    model.growth_order = 2;
    return model;
}

NonlinearModel polynomial(const std::vector<std::vector<double>>& drift,
                          const std::vector<std::vector<double>>& diffusion) {
    if (coefficient(drift, 0, 0) != 0.0 || coefficient(diffusion, 0, 0) != 0.0) {
        throw Error(ErrorCode::ValidationError, "polynomial model needs a zero constant coefficient");
    }
    NonlinearModel model;
    model.drift = [drift](const Vector& y, const Vector& u, Vector& out) {
        out.resize(1);
        out(0) = eval_poly(drift, y(0), u(0));
    };
    model.diffusion = [diffusion](const Vector& y, const Vector& u, Vector& out) {
        out.resize(1);
        out(0) = eval_poly(diffusion, y(0), u(0));
    };
    model.linearization = {scalar(coefficient(drift, 1, 0)), scalar(coefficient(drift, 0, 1)),
                           scalar(coefficient(diffusion, 1, 0)), scalar(coefficient(diffusion, 0, 1))};
    int order = 1;
    for (const auto* c : {&drift, &diffusion}) {
        for (std::size_t i = 0; i < c->size(); ++i) {
            for (std::size_t j = 0; j < (*c)[i].size(); ++j) {
                if ((*c)[i][j] != 0.0) order = std::max(order, static_cast<int>(i + j));
            }
        }
    }
    model.growth_order = order;
    return model;
}

NonlinearModel perturbed_linear(const LinearPlant& plant, double lipschitz) {
    NonlinearModel model = linear(plant);
    model.drift = [A = plant.A, B = plant.B, lipschitz](const Vector& y, const Vector& u, Vector& out) {
        out.noalias() = A * y;
        out.noalias() += B * u;
        out.array() += lipschitz * y.array().tanh();
    };
    model.diffusion = [C = plant.C, D = plant.D, lipschitz](const Vector& y, const Vector& u, Vector& out) {
        out.noalias() = C * y;
        out.noalias() += D * u;
        out.array() += lipschitz * y.array().tanh();
    };
    model.lipschitz_margin = lipschitz;
    return model;
}

} // namespace smpc_lab::models
