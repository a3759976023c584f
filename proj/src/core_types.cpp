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

#include "smpc_lab/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace smpc_lab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::SingularR: return "SingularR";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotDominating: return "NotDominating";
    case ErrorCode::HorizonExceedsRiccati: return "HorizonExceedsRiccati";
    case ErrorCode::OutOfCycle: return "OutOfCycle";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::NonPositiveEstimate: return "NonPositiveEstimate";
    case ErrorCode::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    }
    return "Unknown";
}

namespace {

std::string shape(const Matrix& M) {
    return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (M.rows() != rows || M.cols() != cols) {
        throw Error(ErrorCode::DimensionMismatch, std::string(name) + " is " + shape(M) +
                                                      ", expected " + std::to_string(rows) + "x" +
                                                      std::to_string(cols));
    }
}

} // namespace

bool all_finite(const Matrix& M) {
    return M.allFinite();
}

const LinearPlant& validate_plant(const LinearPlant& plant) {
    const Eigen::Index n = plant.A.rows();
    const Eigen::Index m = plant.B.cols();
    if (n == 0 || m == 0) {
        throw Error(ErrorCode::DimensionMismatch, "plant dimensions must be positive");
    }
    require_shape(plant.A, n, n, "A");
    require_shape(plant.B, n, m, "B");
    require_shape(plant.C, n, n, "C");
    require_shape(plant.D, n, m, "D");
    for (const auto* M : {&plant.A, &plant.B, &plant.C, &plant.D}) {
        if (!all_finite(*M)) {
            throw Error(ErrorCode::NonFiniteEntry, "plant matrix contains NaN or Inf");
        }
    }
    return plant;
}

Matrix symmetrize(const Matrix& M) {
    if (M.rows() != M.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "symmetrize needs a square matrix, got " + shape(M));
    }
    return 0.5 * (M + M.transpose());
}

double lambda_min(const Matrix& M) {
    if (M.rows() == 1) return M(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double lambda_max(const Matrix& M) {
    if (M.rows() == 1) return M(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double spectral_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    if (M.size() == 1) return std::abs(M(0, 0));
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

CostWeights::CostWeights(const Matrix& Q, const Matrix& R, const Matrix& G) {
    if (Q.rows() != Q.cols() || R.rows() != R.cols() || G.rows() != G.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "weights must be square");
    }
    if (G.rows() != Q.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "G is " + shape(G) + " but Q is " + shape(Q));
    }
    if (!all_finite(Q) || !all_finite(R) || !all_finite(G)) {
        throw Error(ErrorCode::NonFiniteEntry, "weights contain NaN or Inf");
    }
    Q_ = symmetrize(Q);
    R_ = symmetrize(R);
    G_ = symmetrize(G);
    if (Q_.rows() == 0 || R_.rows() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "empty weight matrix");
    }
    if (lambda_min(Q_) <= 0.0) {
        throw Error(ErrorCode::NotPositiveDefinite, "Q must be positive definite");
    }
    if (lambda_min(R_) <= 0.0) {
        throw Error(ErrorCode::NotPositiveDefinite, "R must be positive definite");
    }
    if (lambda_min(G_) < -kSymmetryTolerance) {
        throw Error(ErrorCode::NotPositiveDefinite, "G must be positive semidefinite");
    }
}

CostWeights::CostWeights(const Matrix& Q, const Matrix& R)
    : CostWeights(Q, R, Matrix::Zero(Q.rows(), Q.cols())) {}

void CostWeights::check_compatible(const LinearPlant& plant) const {
    require_shape(Q_, plant.n(), plant.n(), "Q");
    require_shape(R_, plant.m(), plant.m(), "R");
}

void validate_model(const NonlinearModel& model) {
    validate_plant(model.linearization);
    if (!model.drift || !model.diffusion) {
        throw Error(ErrorCode::ValidationError, "model needs both drift and diffusion");
    }
    const auto n = model.linearization.n();
    const auto m = model.linearization.m();
    const Vector y = Vector::Zero(n);
    const Vector u = Vector::Zero(m);
    Vector out = Vector::Constant(n, std::nan(""));
    for (const auto* field : {&model.drift, &model.diffusion}) {
        out.setConstant(std::nan(""));
        (*field)(y, u, out);
        if (out.size() != n) {
            throw Error(ErrorCode::DimensionMismatch, "model output dimension differs from linearization");
        }
        if (!out.allFinite() || out.cwiseAbs().maxCoeff() > 1e-12) {
            throw Error(ErrorCode::ValidationError, "model must vanish at the origin");
        }
    }
}

LinearizationCheck check_linearization(const NonlinearModel& model, double step, double tolerance) {
    validate_model(model);
    const auto& lin = model.linearization;
    const auto n = lin.n();
    const auto m = lin.m();

    double worst = 0.0;
    Vector plus(n), minus(n);
    auto compare = [&](const VectorField& f, const Matrix& dY, const Matrix& du) {
        for (Eigen::Index j = 0; j < n + m; ++j) {
            Vector y = Vector::Zero(n);
            Vector u = Vector::Zero(m);
            Vector yp = y, up = u;
            if (j < n) {
                yp(j) = step;
                y(j) = -step;
            } else {
                up(j - n) = step;
                u(j - n) = -step;
            }
            f(yp, up, plus);
            f(y, u, minus);
            const Vector column = (plus - minus) / (2.0 * step);
            const Vector expected = j < n ? Vector(dY.col(j)) : Vector(du.col(j - n));
            worst = std::max(worst, (column - expected).cwiseAbs().maxCoeff());
        }
    };
    compare(model.drift, lin.A, lin.B);
    compare(model.diffusion, lin.C, lin.D);
    return {worst <= tolerance, worst};
}

TimeGrid::TimeGrid(double t0_, double h_, std::size_t n_steps_) : t0(t0_), h(h_), n_steps(n_steps_) {
    if (!(h > 0.0) || !std::isfinite(h) || n_steps < 1) {
        throw Error(ErrorCode::InvalidGrid, "grid needs h > 0 and at least one step");
    }
}

std::size_t TimeGrid::index_of(double t) const {
    const double k = std::round((t - t0) / h);
    if (k < 0.0 || k > static_cast<double>(n_steps) ||
        std::abs(t0 + k * h - t) > kGridTolerance * std::max(1.0, std::abs(t))) {
        throw Error(ErrorCode::InvalidGrid, "time " + std::to_string(t) + " is not a grid node");
    }
    return static_cast<std::size_t>(k);
}

std::size_t whole_steps(double span, double h, const char* field) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error(ErrorCode::ValidationError, "h must be positive");
    }
    if (!(span > 0.0) || !std::isfinite(span)) {
        throw Error(ErrorCode::ValidationError, std::string(field) + " must be positive");
    }
    const double k = std::round(span / h);
    if (k < 1.0 || std::abs(k * h - span) > kGridTolerance * std::max(1.0, span)) {
        throw Error(ErrorCode::ValidationError, std::string(field) + " is not a multiple of h");
    }
    return static_cast<std::size_t>(k);
}

std::size_t SmpcConfig::steps_per_cycle() const { return whole_steps(tau, h, "tau"); }
std::size_t SmpcConfig::horizon_steps() const { return whole_steps(T, h, "T"); }
std::size_t SmpcConfig::simulation_steps() const { return whole_steps(t_end, h, "t_end"); }

void validate_config(const SmpcConfig& config) {
    const auto n_c = config.steps_per_cycle();
    const auto n_t = config.horizon_steps();
    config.simulation_steps();
    if (n_c > n_t) {
        throw Error(ErrorCode::ValidationError, "tau must not exceed T");
    }
    if (config.x0.size() == 0 || !config.x0.allFinite()) {
        throw Error(ErrorCode::ValidationError, "x0 must be a finite, non-empty vector");
    }
}

double default_step(double T, double tau) {
    const double target = std::min(tau / 50.0, 1e-3 * std::max(1.0, T));
    return tau / std::ceil(tau / target - 1e-9);
}

} // namespace smpc_lab
