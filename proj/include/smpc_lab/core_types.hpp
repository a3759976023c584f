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
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "smpc_lab/errors.hpp"

namespace smpc_lab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetry tolerance applied after projection and when validating weights.
inline constexpr double kSymmetryTolerance = 1e-12;
// Relative tolerance used to decide whether a time is a whole multiple of a step.
inline constexpr double kGridTolerance = 1e-9;

/// Controlled linear SDE dX = (AX + Bu) dt + (CX + Du) dW with scalar W.
struct LinearPlant {
    Matrix A; ///< n x n drift state gain
    Matrix B; ///< n x m drift control gain
    Matrix C; ///< n x n diffusion state gain
    Matrix D; ///< n x m diffusion control gain

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }
};

/// Throws DimensionMismatch or NonFiniteEntry; returns the plant unchanged otherwise.
const LinearPlant& validate_plant(const LinearPlant& plant);

/// (M + M^T) / 2.
Matrix symmetrize(const Matrix& M);

bool all_finite(const Matrix& M);

/// Smallest and largest eigenvalues of the symmetric part of M.
double lambda_min(const Matrix& M);
double lambda_max(const Matrix& M);

/// Largest singular value.
double spectral_norm(const Matrix& M);

/// Short human-readable rendering (%.6g) for diagnostics.
std::string format_number(double v);

/// Stage weights Q, R and terminal weight G of the finite-horizon problem.
/// Inputs are symmetrized on construction; Q and R must be positive definite
/// and G positive semidefinite (down to -1e-12).
class CostWeights {
public:
    CostWeights(const Matrix& Q, const Matrix& R, const Matrix& G);
    /// G = 0.
    CostWeights(const Matrix& Q, const Matrix& R);

    const Matrix& Q() const { return Q_; }
    const Matrix& R() const { return R_; }
    const Matrix& G() const { return G_; }

    CostWeights with_terminal(const Matrix& G) const { return CostWeights(Q_, R_, G); }
    CostWeights scaled(double c) const { return CostWeights(c * Q_, c * R_, c * G_); }

    void check_compatible(const LinearPlant& plant) const;

private:
    Matrix Q_;
    Matrix R_;
    Matrix G_;
};

/// Vector field evaluated into a caller-owned buffer (no allocation per call).
/// Must be pure: the engine calls it concurrently from worker threads.
using VectorField = std::function<void(const Vector& y, const Vector& u, Vector& out)>;

/// Physical system dY = b(Y,u) dt + sigma(Y,u) dW together with its
/// linearization at the origin, which serves as the plant model.
struct NonlinearModel {
    VectorField drift;
    VectorField diffusion;
    LinearPlant linearization;
    std::optional<int> growth_order;
    std::optional<double> lipschitz_margin;
};

/// Checks b(0,0) = 0, sigma(0,0) = 0 and callable output dimensions.
void validate_model(const NonlinearModel& model);

struct LinearizationCheck {
    bool consistent = false;
    double max_error = 0.0;
};

/// Central finite differences of drift/diffusion at the origin compared to
/// the stored linearization.
LinearizationCheck check_linearization(const NonlinearModel& model, double step = 1e-5,
                                       double tolerance = 1e-4);

/// Uniform grid t0, t0 + h, ..., t0 + n_steps h.
struct TimeGrid {
    double t0 = 0.0;
    double h = 0.0;
    std::size_t n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double t0, double h, std::size_t n_steps);

    std::size_t n_nodes() const { return n_steps + 1; }
    double t(std::size_t i) const { return t0 + static_cast<double>(i) * h; }
    double t_end() const { return t(n_steps); }
    /// Index of the node at time t; throws InvalidGrid when t is off-grid.
    std::size_t index_of(double t) const;
};

/// Number of whole steps of size h in `span`; throws ValidationError (naming
/// `field`) when span is not a positive multiple of h.
std::size_t whole_steps(double span, double h, const char* field);

struct SmpcConfig {
    double T = 1.0;       ///< prediction horizon
    double tau = 0.5;     ///< control horizon / sampling interval
    double h = 1e-3;      ///< integration step
    Vector x0;            ///< initial state
    double t_end = 1.0;   ///< simulation end time
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;

    std::size_t steps_per_cycle() const;   ///< N_c
    std::size_t horizon_steps() const;     ///< N_T
    std::size_t simulation_steps() const;  ///< N_e
    TimeGrid simulation_grid() const { return TimeGrid(0.0, h, simulation_steps()); }
};

/// Checks 0 < tau <= T and that tau, T, t_end are whole multiples of h.
void validate_config(const SmpcConfig& config);

/// Default step min(tau/50, 1e-3 max(1,T)), shrunk so that tau is a multiple.
double default_step(double T, double tau);

} // namespace smpc_lab
