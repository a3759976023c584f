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

#include <array>
#include <cmath>
#include <random>

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include "smpc_lab/riccati.hpp"
#include "test_helpers.hpp"

namespace smpc_lab {
namespace {

using testing::code_of;
using testing::scalar;

// Scalar flow for the exponential-system plant: s' = 5/2 - 2 s - s^2 / (1 + s).
double scalar_sigma_oracle(double s0, double t) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 1>;
    State s{s0};
    auto rhs = [](const State& x, State& dx, double) { dx[0] = 2.5 - 2.0 * x[0] - x[0] * x[0] / (1.0 + x[0]); };
    odeint::integrate_adaptive(odeint::make_controlled(1e-14, 1e-14, odeint::runge_kutta_dopri5<State>()), rhs, s,
                               0.0, t, 1e-4);
    return s[0];
}

Matrix random_spd(std::mt19937& gen, int n, double shift) {
    std::normal_distribution<double> nd;
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = nd(gen);
    return M * M.transpose() + shift * Matrix::Identity(n, n);
}

LinearPlant random_plant(std::mt19937& gen, int n, int m) {
    std::normal_distribution<double> nd;
    auto draw = [&](int r, int c, double s) {
        Matrix M(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) M(i, j) = s * nd(gen);
        return M;
    };
    return {draw(n, n, 1.0), draw(n, m, 1.0), draw(n, n, 0.3), draw(n, m, 0.3)};
}

GTEST_TEST(OperatorTest, ScalarExample) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights();
    const Matrix P = scalar(1.0);
    EXPECT_DOUBLE_EQ(op_Q(P, plant, w)(0, 0), 0.5);   // 5/2 - 2
    EXPECT_DOUBLE_EQ(op_S(P, plant)(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(op_R(P, plant, w)(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(op_K(P, plant, w)(0, 0), -0.5);
    EXPECT_DOUBLE_EQ(riccati_rhs(P, plant, w)(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(are_residual(P, plant, w), 0.0);
}

GTEST_TEST(OperatorTest, SingularR) {
    const LinearPlant plant{scalar(-1.0), Matrix::Ones(1, 2), scalar(0.0), Matrix::Zero(1, 2)};
    Matrix R = Matrix::Identity(2, 2);
    R(1, 1) = 1e-13;
    const CostWeights w(scalar(1.0), R);
    EXPECT_EQ(code_of([&] { op_K(scalar(1.0), plant, w); }), ErrorCode::SingularR);
    R(1, 1) = 1e-6;
    EXPECT_NO_THROW(op_K(scalar(1.0), plant, CostWeights(scalar(1.0), R)));
}

GTEST_TEST(FlowTest, FixedPointStaysPut) {
    const auto plant = testing::ex21_plant();
    const auto sol = integrate_riccati(plant, testing::ex21_weights(1.0), 3.0, 1e-3);
    for (const auto& s : sol.sigma) EXPECT_NEAR(s(0, 0), 1.0, 1e-14);
}

GTEST_TEST(FlowTest, AgreesWithAdaptiveOracle) {
    const auto sol = integrate_riccati(testing::ex21_plant(), testing::ex21_weights(2.0), 2.0, 1e-3);
    for (double t : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        EXPECT_NEAR(sol.at(t)(0, 0), scalar_sigma_oracle(2.0, t), 1e-10) << "t = " << t;
    }
    // Oracle values frozen from the run above.
    EXPECT_NEAR(scalar_sigma_oracle(2.0, 0.5), 1.2464077639099467, 1e-11);
    EXPECT_NEAR(scalar_sigma_oracle(2.0, 1.0), 1.0618209607387956, 1e-11);
    EXPECT_NEAR(scalar_sigma_oracle(2.0, 2.0), 1.0039418799613393, 1e-11);
}

GTEST_TEST(FlowTest, FourthOrderConvergence) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(0.0);
    const double exact = scalar_sigma_oracle(0.0, 1.0);
    const double e1 = std::abs(integrate_riccati(plant, w, 1.0, 0.1).at(1.0)(0, 0) - exact);
    const double e2 = std::abs(integrate_riccati(plant, w, 1.0, 0.05).at(1.0)(0, 0) - exact);
    EXPECT_GE(e1 / e2, 12.0);
}

GTEST_TEST(FlowTest, MonotoneFromZeroAndOrderPreserving) {
    const auto plant = testing::ex22_plant();
    const auto low = integrate_riccati(plant, testing::ex22_weights(0.0), 5.0, 1e-3);
    const auto high = integrate_riccati(plant, testing::ex22_weights(0.5), 5.0, 1e-3);
    for (std::size_t i = 1; i < low.sigma.size(); ++i) {
        EXPECT_GE(low.sigma[i](0, 0), low.sigma[i - 1](0, 0) - 1e-14);
        EXPECT_LE(low.sigma[i](0, 0), high.sigma[i](0, 0) + 1e-14);
    }
}

GTEST_TEST(FlowTest, SymmetricPsdForRandomPlants) {
    std::mt19937 gen(11);
    for (int trial = 0; trial < 5; ++trial) {
        const auto plant = random_plant(gen, 3, 2);
        const CostWeights w(random_spd(gen, 3, 0.5), random_spd(gen, 2, 0.5), random_spd(gen, 3, 0.0));
        const auto sol = integrate_riccati(plant, w, 1.0, 1e-3);
        for (const auto& s : sol.sigma) {
            EXPECT_LE((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_GE(lambda_min(s), -1e-10);
        }
    }
}

GTEST_TEST(FlowTest, BackwardDreMatchesForwardFlow) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto fwd = integrate_riccati(plant, w, 1.5, 1e-3);
    const auto bwd = integrate_dre_backward(plant, w, 1.5, 1e-3);
    ASSERT_EQ(bwd.size(), fwd.sigma.size());
    for (std::size_t i = 0; i < bwd.size(); ++i) {
        EXPECT_NEAR(bwd[i](0, 0), fwd.sigma[fwd.sigma.size() - 1 - i](0, 0), 1e-10);
    }
}

GTEST_TEST(FlowTest, HugeStepFails) {
    EXPECT_EQ(code_of([] { integrate_riccati(testing::ex22_plant(), testing::ex22_weights(), 200.0, 20.0); }),
              ErrorCode::StepTooLarge);
}

GTEST_TEST(AreTest, ScalarExamples) {
    const auto a = solve_are(testing::ex21_plant(), testing::ex21_weights());
    EXPECT_NEAR(a.P_inf(0, 0), 1.0, 1e-9);
    EXPECT_LE(a.residual, 1e-10);
    const auto b = solve_are(testing::ex22_plant(), testing::ex22_weights());
    EXPECT_NEAR(b.P_inf(0, 0), 1.0, 1e-9);
    EXPECT_NEAR(op_K(b.P_inf, testing::ex22_plant(), testing::ex22_weights())(0, 0), 3.0, 1e-8);
}

GTEST_TEST(AreTest, StableUncontrolledIsLyapunov) {
    const LinearPlant plant{-Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Zero(2, 2), Matrix::Zero(2, 1)};
    const auto a = solve_are(plant, CostWeights(Matrix::Identity(2, 2), scalar(1.0)));
    EXPECT_LE((a.P_inf - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-9);
}

GTEST_TEST(AreTest, RandomPlantsResidualAndPositivity) {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 6; ++trial) {
        const auto plant = random_plant(gen, 3, 2);
        const CostWeights w(random_spd(gen, 3, 0.5), random_spd(gen, 2, 0.5));
        const auto a = solve_are(plant, w);
        EXPECT_LE(are_residual(a.P_inf, plant, w), 1e-10);
        EXPECT_GT(lambda_min(a.P_inf), 0.0);
        EXPECT_LE((a.P_inf - a.P_inf.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

GTEST_TEST(AreTest, TighterToleranceMovesLittle) {
    const auto plant = testing::ex22_plant();
    const auto w = testing::ex22_weights();
    AreOptions strict;
    strict.tol = 1e-11;
    const auto a = solve_are(plant, w);
    const auto b = solve_are(plant, w, strict);
    EXPECT_LE((a.P_inf - b.P_inf).norm(), 1e-8);
}

GTEST_TEST(AreTest, ClosedLoopIsMeanSquareStable) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights();
    const auto a = solve_are(plant, w);
    const auto c = stability_constants(a.P_inf, plant, w);
    // The closed-loop second-moment generator must be Hurwitz: 2 A_inf + C_inf^2 < 0.
    EXPECT_LT(2.0 * c.A_inf(0, 0) + c.C_inf(0, 0) * c.C_inf(0, 0), 0.0);
}

GTEST_TEST(LyapunovTest, SolvesGeneralizedEquation) {
    Matrix A(2, 2), C(2, 2), W(2, 2);
    A << -2, 1, 0, -3;
    C << 0.3, 0, 0.1, 0.2;
    W << 1, 0.2, 0.2, 2;
    const Matrix X = solve_generalized_lyapunov(A, C, W);
    const Matrix res = A.transpose() * X + X * A + C.transpose() * X * C + W;
    EXPECT_LE(res.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(code_of([] { solve_generalized_lyapunov(scalar(0.0), scalar(0.0), scalar(1.0)); }),
              ErrorCode::UnstableClosedLoop);
}

GTEST_TEST(StabilizabilityTest, Examples) {
    EXPECT_TRUE(check_l2_stabilizable(testing::ex21_plant()).stabilizable);
    EXPECT_TRUE(check_l2_stabilizable(testing::ex22_plant()).stabilizable);
    const LinearPlant stuck{scalar(1.0), scalar(0.0), scalar(0.0), scalar(0.0)};
    const auto r = check_l2_stabilizable(stuck);
    EXPECT_FALSE(r.stabilizable);
    EXPECT_FALSE(r.diagnostic.empty());
    // Stable drift, but 2A + C^2 > 0 and no input.
    const LinearPlant noisy{scalar(-1.0), scalar(0.0), scalar(2.0), scalar(0.0)};
    EXPECT_FALSE(check_l2_stabilizable(noisy).stabilizable);
}

GTEST_TEST(ConstantsTest, ExponentialSystem) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto c = stability_constants(scalar(1.0), plant, w);
    EXPECT_DOUBLE_EQ(c.K0, 1.0);
    EXPECT_DOUBLE_EQ(c.lambda_inf, 1.375);
    EXPECT_DOUBLE_EQ(c.lambda_star, 1.375);
    ASSERT_TRUE(c.K1.has_value());
    EXPECT_DOUBLE_EQ(*c.K1, 1.0);
    EXPECT_DOUBLE_EQ(c.theta_inf(0, 0), -0.5);
    EXPECT_FALSE(stability_constants(scalar(1.0), plant, testing::ex21_weights(0.5)).K1.has_value());
}

GTEST_TEST(ConstantsTest, K1RequiresDomination) {
    EXPECT_EQ(code_of([] { k1_dominating(scalar(0.5), scalar(1.0)); }), ErrorCode::NotDominating);
    Matrix G(2, 2), P(2, 2);
    G << 3, 0, 0, 2;
    P << 2, 0, 0, 1;
    EXPECT_DOUBLE_EQ(k1_dominating(G, P), 1.0 * 2.0 * 2.0 / 1.0);
}

GTEST_TEST(ConvergenceTest, BoundHoldsWhenDominating) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto a = solve_are(plant, w);
    const auto c = stability_constants(a.P_inf, plant, w);
    const auto report = riccati_convergence_report(integrate_riccati(plant, w, 5.0, 1e-3), a, c);
    EXPECT_TRUE(report.bound_checked);
    EXPECT_TRUE(report.bound_holds);
    for (const auto& row : report.rows) ASSERT_TRUE(row.bound.has_value());
}

GTEST_TEST(ConvergenceTest, EntryTimeWithoutDomination) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(0.0);
    const auto a = solve_are(plant, w);
    const auto c = stability_constants(a.P_inf, plant, w);
    const auto report = riccati_convergence_report(integrate_riccati(plant, w, 5.0, 1e-3), a, c);
    EXPECT_FALSE(report.bound_checked);
    EXPECT_GT(report.entry_radius, 0.0);
    ASSERT_TRUE(report.entry_time.has_value());
    const auto& rows = report.rows;
    for (const auto& row : rows) {
        if (row.t >= *report.entry_time) EXPECT_LT(row.gap, report.entry_radius);
    }
}

} // namespace
} // namespace smpc_lab
