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

#include <cmath>

#include <gtest/gtest.h>

#include "smpc_lab/riccati.hpp"
#include "smpc_lab/smpc.hpp"
#include "test_helpers.hpp"

namespace smpc_lab {
namespace {

using testing::code_of;
using testing::scalar;
using testing::vec1;

GainSchedule ex21_schedule(double G, double T, double tau, double h) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(G);
    return synthesize_schedule(plant, w, solve_are(plant, w), T, tau, h);
}

GTEST_TEST(ScheduleTest, StationaryTerminalWeightGivesConstantGain) {
    const auto s = ex21_schedule(1.0, 1.5, 0.5, 1e-3);
    ASSERT_EQ(s.steps_per_cycle(), 500u);
    for (const auto& th : s.theta) EXPECT_NEAR(th(0, 0), -0.5, 1e-12);
    EXPECT_NEAR(s.theta_inf(0, 0), -0.5, 1e-9);

    const auto plant = testing::ex22_plant();
    const auto w = testing::ex22_weights(1.0);
    const auto q = synthesize_schedule(plant, w, solve_are(plant, w), 1.0, 0.25, 1e-3);
    for (const auto& th : q.theta) EXPECT_NEAR(th(0, 0), 3.0, 1e-9);
}

GTEST_TEST(ScheduleTest, GainAtStartUsesFullHorizon) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto sol = integrate_riccati(plant, w, 1.5, 1e-3);
    const auto s = build_gain_schedule(sol, solve_are(plant, w), 1.5, 0.5);
    EXPECT_DOUBLE_EQ(s.theta.front()(0, 0), op_K(sol.at(1.5), plant, w)(0, 0));
    EXPECT_DOUBLE_EQ(s.theta.back()(0, 0), op_K(sol.at(1.0), plant, w)(0, 0));
    // K(s) = -s / (1 + s) is decreasing in s, and Sigma decreases towards 1.
    EXPECT_LT(s.theta.back()(0, 0), s.theta.front()(0, 0));
}

GTEST_TEST(ScheduleTest, HorizonBeyondSolution) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto sol = integrate_riccati(plant, w, 1.0, 1e-3);
    EXPECT_EQ(code_of([&] { build_gain_schedule(sol, solve_are(plant, w), 1.5, 0.5); }),
              ErrorCode::HorizonExceedsRiccati);
}

GTEST_TEST(ScheduleTest, BackwardDreAgrees) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto are = solve_are(plant, w);
    const auto a = synthesize_schedule(plant, w, are, 1.5, 0.5, 1e-3);
    const auto b = schedule_from_dre(plant, w, are, 1.5, 0.5, 1e-3);
    ASSERT_EQ(a.theta.size(), b.theta.size());
    for (std::size_t i = 0; i < a.theta.size(); ++i) EXPECT_NEAR(a.theta[i](0, 0), b.theta[i](0, 0), 1e-10);
}

GTEST_TEST(ScheduleTest, InvariantUnderWeightScaling) {
    const auto plant = testing::ex22_plant();
    const auto w = testing::ex22_weights(2.0);
    const auto ws = w.scaled(7.0);
    const auto a = synthesize_schedule(plant, w, solve_are(plant, w), 1.0, 0.25, 1e-3);
    const auto b = synthesize_schedule(plant, ws, solve_are(plant, ws), 1.0, 0.25, 1e-3);
    for (std::size_t i = 0; i < a.theta.size(); ++i) EXPECT_NEAR(a.theta[i](0, 0), b.theta[i](0, 0), 1e-10);
    EXPECT_NEAR(a.theta_inf(0, 0), b.theta_inf(0, 0), 1e-9);
}

GTEST_TEST(ScheduleTest, LeftContinuousLookup) {
    GainSchedule s;
    s.h = 0.1;
    s.tau = 0.3;
    s.T = 0.3;
    s.theta = {scalar(0.0), scalar(1.0), scalar(2.0), scalar(3.0)};
    s.theta_inf = scalar(-1.0);
    EXPECT_EQ(s.at(0.0)(0, 0), 0.0);
    EXPECT_EQ(s.at(0.1)(0, 0), 1.0);
    EXPECT_EQ(s.at(0.15)(0, 0), 2.0);
    EXPECT_EQ(s.at(0.3)(0, 0), 3.0);
    EXPECT_EQ(code_of([&] { s.at(0.31); }), ErrorCode::OutOfCycle);
    EXPECT_EQ(code_of([&] { s.at(-0.01); }), ErrorCode::OutOfCycle);
}

GTEST_TEST(ControlTest, ModesPickTheirInputs) {
    const auto s = ex21_schedule(1.0, 1.0, 0.5, 1e-2);
    const Vector x = vec1(2.0);
    const Vector y = vec1(4.0);
    EXPECT_NEAR(control_at(ControllerMode::smpc(s), 0.25, x, y)(0), -1.0, 1e-9);
    EXPECT_NEAR(control_at(ControllerMode::rhc(s), 0.25, x, y)(0), -1.0, 1e-9);
    EXPECT_NEAR(control_at(ControllerMode::static_are(s), 0.25, x, y)(0), -2.0, 1e-9);
    EXPECT_NEAR(control_at(ControllerMode::open_loop(s), 0.25, x, y)(0), -1.0, 1e-9);
    EXPECT_EQ(code_of([&] { control_at(ControllerMode::smpc(s), 0.6, x, y); }), ErrorCode::OutOfCycle);
}

GTEST_TEST(ControlTest, ConstantSchedule) {
    const auto s = constant_schedule(scalar(3.0), 0.5, 0.1);
    EXPECT_EQ(s.steps_per_cycle(), 5u);
    EXPECT_EQ(ControllerMode::smpc(s).gain_at_node(3)(0, 0), 3.0);
    EXPECT_EQ(ControllerMode::static_are(s).gain_at_node(3)(0, 0), 3.0);
}

GTEST_TEST(DeviationTest, ShrinksWithHorizonGap) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto are = solve_are(plant, w);
    const auto study = theta_deviation_study(plant, w, are, 0.5, {0.25, 0.5, 1.0, 2.0}, 1e-3);
    ASSERT_EQ(study.rows.size(), 4u);
    EXPECT_TRUE(study.decreasing);
    for (const auto& row : study.rows) {
        EXPECT_GT(row.table.max_deviation, 0.0);
        EXPECT_LE(row.table.max_deviation, 2.0 * row.table.reference);
    }
    EXPECT_EQ(code_of([&] { theta_deviation_study(plant, w, are, 0.5, {0.5, 1.0}, 1e-3); }),
              ErrorCode::PreconditionViolated);
}

GTEST_TEST(DeviationTest, ReferenceValue) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto are = solve_are(plant, w);
    const auto c = stability_constants(are.P_inf, plant, w);
    const auto s = synthesize_schedule(plant, w, are, 1.5, 0.5, 1e-3);
    const auto table = theta_deviation_bound(s, c, *c.K1);
    EXPECT_NEAR(table.reference, std::exp(-2.75), 1e-9);
    EXPECT_EQ(table.rows.size(), 501u);
    // Largest at s = tau, where the remaining horizon is shortest.
    EXPECT_DOUBLE_EQ(table.max_deviation, table.rows.back().deviation);
}

} // namespace
} // namespace smpc_lab
