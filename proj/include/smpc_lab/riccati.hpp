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
#include <vector>

#include "smpc_lab/core_types.hpp"

namespace smpc_lab {

// Operators of the stochastic LQ problem for the plant [A,B;C,D]:
//   Q(P) = PA + A'P + C'PC + Q      S(P) = B'P + D'PC
//   R(P) = R + D'PD                 K(P) = -R(P)^{-1} S(P)
Matrix op_Q(const Matrix& P, const LinearPlant& plant, const CostWeights& weights);
Matrix op_S(const Matrix& P, const LinearPlant& plant);
Matrix op_R(const Matrix& P, const LinearPlant& plant, const CostWeights& weights);
/// Throws SingularR when R(P) has condition number above 1e12.
Matrix op_K(const Matrix& P, const LinearPlant& plant, const CostWeights& weights);

/// Q(P) - S(P)' R(P)^{-1} S(P); the right-hand side of the forward Riccati flow
/// and the left-hand side of the algebraic equation.
Matrix riccati_rhs(const Matrix& P, const LinearPlant& plant, const CostWeights& weights);

/// Spectral norm of riccati_rhs(P).
double are_residual(const Matrix& P, const LinearPlant& plant, const CostWeights& weights);

/// Samples of Sigma(t; G) on a uniform grid starting at Sigma(0) = G.
struct RiccatiSolution {
    TimeGrid grid;
    std::vector<Matrix> sigma;
    CostWeights weights;
    LinearPlant plant;

    double horizon() const { return grid.t_end(); }
    /// Sigma at a grid node.
    const Matrix& at(double t) const { return sigma[grid.index_of(t)]; }
    /// Value of the finite-horizon DRE solution P_T(t) = Sigma(T - t), t in [0, T].
    const Matrix& p_T(double T, double t) const { return at(T - t); }
};

/// Classical RK4 on Sigma' = Q(Sigma) - S' R^{-1} S with symmetrization after
/// every step. `horizon` must be a multiple of h. Throws StepTooLarge on
/// non-finite iterates.
RiccatiSolution integrate_riccati(const LinearPlant& plant, const CostWeights& weights, double horizon,
                                  double h);

/// Backward RK4 on P_T' + Q(P_T) - S' R^{-1} S = 0 from P_T(T) = G; element i
/// holds P_T(i h). Independent route to the same object as p_T above.
std::vector<Matrix> integrate_dre_backward(const LinearPlant& plant, const CostWeights& weights,
                                           double T, double h);

struct AreSolution {
    Matrix P_inf;
    double residual = 0.0;
    double horizon_used = 0.0;   ///< time integrated before the residual fell below tol
    int newton_iterations = 0;   ///< accepted Newton-Kleinman refinements
    double step = 0.0;           ///< RK4 step used for the horizon integration
};

struct AreOptions {
    double tol = 1e-10;
    double t_max = 200.0;
    int max_newton = 10;
};

/// Integrates the Riccati flow from G = 0 until the residual drops below tol,
/// then polishes with Newton-Kleinman (each step a generalized Lyapunov solve).
/// The terminal weight G of `weights` is ignored. Throws NoConvergence.
AreSolution solve_are(const LinearPlant& plant, const CostWeights& weights, const AreOptions& options = {});

/// Solves A'P + PA + C'PC + W = 0 by Kronecker vectorization.
/// Throws UnstableClosedLoop when the operator is singular.
Matrix solve_generalized_lyapunov(const Matrix& A, const Matrix& C, const Matrix& W);

struct StabilizabilityResult {
    bool stabilizable = false;
    std::optional<Matrix> certificate;   ///< positive definite ARE solution with Q = I, R = I
    double residual = 0.0;
    std::string diagnostic;
};

/// L2-stabilizability test: the ARE with identity weights has a positive
/// definite solution.
StabilizabilityResult check_l2_stabilizable(const LinearPlant& plant, double tol = 1e-10,
                                            double t_max = 200.0);

struct StabilityConstants {
    double K0 = 0.0;
    double lambda_inf = 0.0;
    double lambda_star = 0.0;
    std::optional<double> K1;   ///< set when G dominates P_inf
    Matrix theta_inf;
    Matrix A_inf;
    Matrix C_inf;
    double lambda_min_P = 0.0;
    double lambda_max_P = 0.0;
};

/// K0 = n|P|/lmin(P), lambda_inf = lmin(Q + K'RK) / (2 lmin(P)),
/// lambda* = lmin(P) lambda_inf / lmax(P); closed-loop matrices at K(P).
/// K1 is filled in when weights.G() - P_inf >= -1e-10 I.
StabilityConstants stability_constants(const Matrix& P_inf, const LinearPlant& plant,
                                       const CostWeights& weights);

/// |G - P_inf| n|P_inf| / lmin(P_inf); throws NotDominating when G - P_inf is
/// not positive semidefinite (down to -1e-10).
double k1_dominating(const Matrix& G, const Matrix& P_inf);

/// Constant rho and the ball radius (2K0)^{-1} min{(4K0 rho)^{-1}, lambda_inf (K0 rho)^{-1}}
/// that define the entry time t0 for a general terminal weight.
struct EntryBall {
    double rho = 0.0;
    double radius = 0.0;
};
EntryBall entry_ball(const LinearPlant& plant, const CostWeights& weights, const Matrix& P_inf,
                     const StabilityConstants& constants);

struct ConvergenceRow {
    double t = 0.0;
    double gap = 0.0;                 ///< |Sigma(t) - P_inf|
    std::optional<double> bound;      ///< K1 e^{-2 lambda_inf t}
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    bool bound_checked = false;
    bool bound_holds = false;
    std::optional<double> entry_time;   ///< t0 estimate when G does not dominate P_inf
    double entry_radius = 0.0;
};

ConvergenceReport riccati_convergence_report(const RiccatiSolution& riccati, const AreSolution& are,
                                             const StabilityConstants& constants);

} // namespace smpc_lab
