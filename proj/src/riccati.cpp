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

#include "smpc_lab/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

namespace smpc_lab {

namespace {

constexpr double kConditionLimit = 1e12;

// R(P)^{-1} X through a symmetric eigendecomposition so that the condition
// number guard and the solve share one factorization.
Matrix solve_symmetric_guarded(const Matrix& M, const Matrix& X) {
    if (M.rows() == 1) {
        const double v = M(0, 0);
        if (v == 0.0 || !std::isfinite(v)) {
            throw Error(ErrorCode::SingularR, "R + D'PD is singular");
        }
        return X / v;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
    const Vector abs_eig = es.eigenvalues().cwiseAbs();
    const double smallest = abs_eig.minCoeff();
    if (smallest == 0.0 || abs_eig.maxCoeff() / smallest > kConditionLimit) {
        throw Error(ErrorCode::SingularR, "R + D'PD has condition number above 1e12");
    }
    const Matrix& V = es.eigenvectors();
    return V * es.eigenvalues().cwiseInverse().asDiagonal() * (V.transpose() * X);
}

} // namespace

Matrix op_Q(const Matrix& P, const LinearPlant& plant, const CostWeights& weights) {
    return P * plant.A + plant.A.transpose() * P + plant.C.transpose() * P * plant.C + weights.Q();
}

Matrix op_S(const Matrix& P, const LinearPlant& plant) {
    return plant.B.transpose() * P + plant.D.transpose() * P * plant.C;
}

Matrix op_R(const Matrix& P, const LinearPlant& plant, const CostWeights& weights) {
    return weights.R() + plant.D.transpose() * P * plant.D;
}

Matrix op_K(const Matrix& P, const LinearPlant& plant, const CostWeights& weights) {
    return -solve_symmetric_guarded(op_R(P, plant, weights), op_S(P, plant));
}

Matrix riccati_rhs(const Matrix& P, const LinearPlant& plant, const CostWeights& weights) {
    const Matrix S = op_S(P, plant);
    const Matrix K = -solve_symmetric_guarded(op_R(P, plant, weights), S);
    return symmetrize(op_Q(P, plant, weights) + S.transpose() * K);
}

double are_residual(const Matrix& P, const LinearPlant& plant, const CostWeights& weights) {
    return spectral_norm(riccati_rhs(P, plant, weights));
}

namespace {

Matrix rk4_step(const Matrix& P, double h, const LinearPlant& plant, const CostWeights& weights) {
    const Matrix k1 = riccati_rhs(P, plant, weights);
    const Matrix k2 = riccati_rhs(P + 0.5 * h * k1, plant, weights);
    const Matrix k3 = riccati_rhs(P + 0.5 * h * k2, plant, weights);
    const Matrix k4 = riccati_rhs(P + h * k3, plant, weights);
    return symmetrize(P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

void check_problem(const LinearPlant& plant, const CostWeights& weights) {
    validate_plant(plant);
    weights.check_compatible(plant);
}

} // namespace

RiccatiSolution integrate_riccati(const LinearPlant& plant, const CostWeights& weights, double horizon,
                                  double h) {
    check_problem(plant, weights);
    const std::size_t n_steps = whole_steps(horizon, h, "horizon");
    RiccatiSolution out{TimeGrid(0.0, h, n_steps), {}, weights, plant};
    out.sigma.reserve(n_steps + 1);
    out.sigma.push_back(weights.G());
    for (std::size_t i = 0; i < n_steps; ++i) {
        Matrix next = rk4_step(out.sigma.back(), h, plant, weights);
        if (!next.allFinite()) {
            throw Error(ErrorCode::StepTooLarge,
                        "Riccati iterate became non-finite at t = " + format_number(out.grid.t(i + 1)));
        }
        out.sigma.push_back(std::move(next));
    }
    return out;
}

std::vector<Matrix> integrate_dre_backward(const LinearPlant& plant, const CostWeights& weights, double T,
                                           double h) {
    check_problem(plant, weights);
    const std::size_t n_steps = whole_steps(T, h, "T");
    std::vector<Matrix> p(n_steps + 1);
    p[n_steps] = weights.G();
    auto backward_rhs = [&](const Matrix& P) -> Matrix { return -riccati_rhs(P, plant, weights); };
    for (std::size_t i = n_steps; i > 0; --i) {
        const Matrix& P = p[i];
        const double dt = -h;
        const Matrix k1 = backward_rhs(P);
        const Matrix k2 = backward_rhs(P + 0.5 * dt * k1);
        const Matrix k3 = backward_rhs(P + 0.5 * dt * k2);
        const Matrix k4 = backward_rhs(P + dt * k3);
        p[i - 1] = symmetrize(P + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        if (!p[i - 1].allFinite()) {
            throw Error(ErrorCode::StepTooLarge, "backward Riccati iterate became non-finite");
        }
    }
    return p;
}

Matrix solve_generalized_lyapunov(const Matrix& A, const Matrix& C, const Matrix& W) {
    const Eigen::Index n = A.rows();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix At = A.transpose();
    const Matrix Ct = C.transpose();
    const Matrix L = Eigen::kroneckerProduct(I, At).eval() + Eigen::kroneckerProduct(At, I).eval() +
                     Eigen::kroneckerProduct(Ct, Ct).eval();
    Eigen::FullPivLU<Matrix> lu(L);
    if (!lu.isInvertible() || lu.rcond() < 1.0 / kConditionLimit) {
        throw Error(ErrorCode::UnstableClosedLoop, "generalized Lyapunov operator is singular");
    }
    const Vector rhs = -Eigen::Map<const Vector>(W.data(), W.size());
    const Vector x = lu.solve(rhs);
    return symmetrize(Eigen::Map<const Matrix>(x.data(), n, n));
}

namespace {

// One Newton-Kleinman step: Lyapunov solve at the gain K(P).
Matrix newton_kleinman_step(const Matrix& P, const LinearPlant& plant, const CostWeights& weights) {
    const Matrix K = op_K(P, plant, weights);
    const Matrix A_cl = plant.A + plant.B * K;
    const Matrix C_cl = plant.C + plant.D * K;
    const Matrix W = weights.Q() + K.transpose() * weights.R() * K;
    return solve_generalized_lyapunov(A_cl, C_cl, W);
}

struct Polished {
    Matrix P;
    double residual;
    int iterations;
};

Polished polish(Matrix P, double residual, const LinearPlant& plant, const CostWeights& weights,
                double target, int max_iterations) {
    int accepted = 0;
    for (int it = 0; it < max_iterations && residual > target; ++it) {
        Matrix candidate;
        try {
            candidate = newton_kleinman_step(P, plant, weights);
        } catch (const Error&) {
            break;
        }
        if (!candidate.allFinite() || lambda_min(candidate) <= 0.0) break;
        const double r = are_residual(candidate, plant, weights);
        if (!(r < residual)) break;
        P = std::move(candidate);
        residual = r;
        ++accepted;
    }
    return {std::move(P), residual, accepted};
}

} // namespace

AreSolution solve_are(const LinearPlant& plant, const CostWeights& weights, const AreOptions& options) {
    if (!(options.tol > 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "ARE tolerance must be positive");
    }
    const CostWeights qr(weights.Q(), weights.R());
    check_problem(plant, qr);
    const Eigen::Index n = plant.n();

    // Horizon integration from G = 0 with step-doubling error control; the
    // flow is only a vehicle towards the fixed point, so the step adapts.
    Matrix P = Matrix::Zero(n, n);
    double t = 0.0;
    double h = std::min(1e-2, 0.1 / (1.0 + 2.0 * spectral_norm(plant.A) +
                                     spectral_norm(plant.C) * spectral_norm(plant.C)));
    double residual = are_residual(P, plant, qr);
    constexpr double kLocalTol = 1e-10;
    double smallest_step = h;
    while (residual > options.tol && t < options.t_max) {
        const double step = std::min(h, options.t_max - t);
        const Matrix full = rk4_step(P, step, plant, qr);
        const Matrix half = rk4_step(rk4_step(P, 0.5 * step, plant, qr), 0.5 * step, plant, qr);
        if (!full.allFinite() || !half.allFinite()) {
            if (step < 1e-12) break;
            h = 0.25 * step;
            continue;
        }
        const double err = (half - full).cwiseAbs().maxCoeff() / (1.0 + half.cwiseAbs().maxCoeff());
        if (err > kLocalTol && step > 1e-8) {
            h = 0.5 * step;
            continue;
        }
        P = half;
        t += step;
        smallest_step = std::min(smallest_step, step);
        residual = are_residual(P, plant, qr);
        if (err < kLocalTol / 64.0) h = std::min(2.0 * step, 1.0);
    }

    AreSolution out;
    out.horizon_used = t;
    out.step = smallest_step;
    if (!P.allFinite()) {
        throw Error(ErrorCode::NoConvergence, "Riccati flow from G = 0 diverged");
    }
    const double target = residual <= options.tol ? options.tol * 1e-2 : options.tol;
    Polished refined = polish(P, residual, plant, qr, target, options.max_newton);
    if (refined.residual > options.tol) {
        throw Error(ErrorCode::NoConvergence, "ARE residual " + format_number(refined.residual) +
                                                  " above tolerance at t_max = " +
                                                  format_number(options.t_max));
    }
    if (lambda_min(refined.P) <= 0.0) {
        throw Error(ErrorCode::NoConvergence, "ARE solution is not positive definite");
    }
    out.P_inf = std::move(refined.P);
    out.residual = refined.residual;
    out.newton_iterations = refined.iterations;
    return out;
}

StabilizabilityResult check_l2_stabilizable(const LinearPlant& plant, double tol, double t_max) {
    StabilizabilityResult result;
    try {
        validate_plant(plant);
        const CostWeights identity(Matrix::Identity(plant.n(), plant.n()),
                                   Matrix::Identity(plant.m(), plant.m()));
        AreOptions options;
        options.tol = tol;
        options.t_max = t_max;
        const AreSolution are = solve_are(plant, identity, options);
        result.stabilizable = lambda_min(are.P_inf) > 0.0;
        result.residual = are.residual;
        result.certificate = are.P_inf;
        result.diagnostic = "ARE converged at t = " + format_number(are.horizon_used);
    } catch (const Error& e) {
        result.stabilizable = false;
        result.diagnostic = e.what();
    }
    return result;
}

double k1_dominating(const Matrix& G, const Matrix& P_inf) {
    const Matrix diff = symmetrize(G - P_inf);
    if (lambda_min(diff) < -1e-10) {
        throw Error(ErrorCode::NotDominating, "G - P_inf is not positive semidefinite");
    }
    const double n = static_cast<double>(P_inf.rows());
    return spectral_norm(diff) * n * spectral_norm(P_inf) / lambda_min(P_inf);
}

StabilityConstants stability_constants(const Matrix& P_inf, const LinearPlant& plant,
                                       const CostWeights& weights) {
    check_problem(plant, weights);
    StabilityConstants c;
    const double n = static_cast<double>(plant.n());
    c.lambda_min_P = lambda_min(P_inf);
    c.lambda_max_P = lambda_max(P_inf);
    c.theta_inf = op_K(P_inf, plant, weights);
    c.A_inf = plant.A + plant.B * c.theta_inf;
    c.C_inf = plant.C + plant.D * c.theta_inf;
    c.K0 = n * spectral_norm(P_inf) / c.lambda_min_P;
    const Matrix closed_weight = weights.Q() + c.theta_inf.transpose() * weights.R() * c.theta_inf;
    c.lambda_inf = lambda_min(closed_weight) / (2.0 * c.lambda_min_P);
    c.lambda_star = c.lambda_min_P * c.lambda_inf / c.lambda_max_P;
    if (lambda_min(symmetrize(weights.G() - P_inf)) >= -1e-10) {
        c.K1 = k1_dominating(weights.G(), P_inf);
    }
    return c;
}

EntryBall entry_ball(const LinearPlant& plant, const CostWeights& weights, const Matrix& P_inf,
                     const StabilityConstants& constants) {
    const double nB = spectral_norm(plant.B);
    const double nC = spectral_norm(plant.C);
    const double nD = spectral_norm(plant.D);
    const double nK = spectral_norm(constants.theta_inf);
    const double nS = spectral_norm(op_S(P_inf, plant));
    const double lr = lambda_min(weights.R());
    const double coupling = nB + nD * nC;
    const Matrix closed_weight =
        weights.Q() + constants.theta_inf.transpose() * weights.R() * constants.theta_inf;
    const double sigma_bound =
        constants.K0 * (spectral_norm(weights.G()) + spectral_norm(closed_weight) / (2.0 * constants.lambda_inf));

    EntryBall ball;
    ball.rho = (coupling + nK * nD * nD) * coupling / lr +
               (coupling * coupling * nD * nD / (lr * lr) + nS * coupling * std::pow(nD, 4) / (lr * lr * lr)) *
                   sigma_bound;
    if (ball.rho <= 0.0) {
        ball.radius = std::numeric_limits<double>::infinity();
        return ball;
    }
    const double K0 = constants.K0;
    ball.radius = std::min(1.0 / (4.0 * K0 * ball.rho), constants.lambda_inf / (K0 * ball.rho)) / (2.0 * K0);
    return ball;
}

ConvergenceReport riccati_convergence_report(const RiccatiSolution& riccati, const AreSolution& are,
                                             const StabilityConstants& constants) {
    ConvergenceReport report;
    report.bound_checked = constants.K1.has_value();
    report.bound_holds = report.bound_checked;
    if (!report.bound_checked) {
        const EntryBall ball = entry_ball(riccati.plant, riccati.weights, are.P_inf, constants);
        report.entry_radius = ball.radius;
    }
    report.rows.reserve(riccati.sigma.size());
    for (std::size_t i = 0; i < riccati.sigma.size(); ++i) {
        ConvergenceRow row;
        row.t = riccati.grid.t(i);
        row.gap = spectral_norm(riccati.sigma[i] - are.P_inf);
        if (report.bound_checked) {
            row.bound = *constants.K1 * std::exp(-2.0 * constants.lambda_inf * row.t);
            // absolute slack covers round-off when the gap and the bound both vanish
            if (row.gap > *row.bound + 1e-12) report.bound_holds = false;
        } else if (!report.entry_time && row.gap < report.entry_radius) {
            report.entry_time = row.t;
        }
        report.rows.push_back(row);
    }
    return report;
}

} // namespace smpc_lab
