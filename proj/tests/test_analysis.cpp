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
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "smpc_lab/analysis.hpp"
#include "smpc_lab/models.hpp"
#include "smpc_lab/riccati.hpp"
#include "smpc_lab/sde_engine.hpp"
#include "smpc_lab/smpc.hpp"
#include "test_helpers.hpp"

namespace smpc_lab {
namespace {

using testing::code_of;
using testing::scalar;
using testing::vec1;

MeanSquareCurve synthetic_curve(double rate, double scale, double se, double t_end = 2.0, double h = 0.01) {
    MeanSquareCurve c;
    c.grid = TimeGrid(0.0, h, static_cast<std::size_t>(std::lround(t_end / h)));
    for (std::size_t i = 0; i < c.grid.n_nodes(); ++i) {
        c.estimate.push_back(scale * std::exp(rate * c.grid.t(i)));
        c.std_error.push_back(se * c.estimate.back());
        c.n_effective.push_back(1000);
    }
    return c;
}

SmpcConfig make_config(double T, double tau, double h, double t_end, std::size_t paths, double x0 = 1.0) {
    SmpcConfig c;
    c.T = T;
    c.tau = tau;
    c.h = h;
    c.t_end = t_end;
    c.n_paths = paths;
    c.seed = 3;
    c.x0 = vec1(x0);
    return c;
}

GTEST_TEST(FitTest, RecoversExponent) {
    const auto fit = fit_decay_rate(synthetic_curve(-3.0, 1.0, 0.01), 0.2, 1.6);
    EXPECT_NEAR(fit.rate, -3.0, 1e-10);
    EXPECT_EQ(fit.n_points, 141u);
    EXPECT_GT(fit.ci_half_width, 0.0);
    EXPECT_LT(fit.ci_half_width, 0.05);
    const auto def = fit_decay_rate(synthetic_curve(-3.0, 1.0, 0.0));
    EXPECT_NEAR(def.t_a, 0.2, 1e-12);
    EXPECT_NEAR(def.t_b, 1.6, 1e-12);
}

GTEST_TEST(FitTest, ScaleInvariant) {
    const auto a = fit_decay_rate(synthetic_curve(-1.7, 1.0, 0.0), 0.1, 1.9);
    const auto b = fit_decay_rate(synthetic_curve(-1.7, 1e6, 0.0), 0.1, 1.9);
    EXPECT_NEAR(a.rate, b.rate, 1e-12);
}

GTEST_TEST(FitTest, Failures) {
    auto c = synthetic_curve(-1.0, 1.0, 0.0);
    c.estimate[50] = 0.0;
    EXPECT_EQ(code_of([&] { fit_decay_rate(c, 0.1, 1.0); }), ErrorCode::NonPositiveEstimate);
    EXPECT_NO_THROW(fit_decay_rate(c, 0.6, 1.0));
    EXPECT_EQ(code_of([&] { fit_decay_rate(c, 0.605, 0.609); }), ErrorCode::PreconditionViolated);
}

GTEST_TEST(CurveTest, NeedsTwoPaths) {
    const auto cfg = make_config(0.5, 0.5, 0.01, 1.0, 1);
    const auto s = constant_schedule(scalar(-0.5), 0.5, 0.01);
    const auto e = simulate_ensemble(models::exponential_example(), ControllerMode::rhc(s), cfg);
    EXPECT_EQ(code_of([&] { mean_square_curve(e); }), ErrorCode::EmptyEnsemble);
}

GTEST_TEST(CurveTest, ZeroStateStaysZero) {
    const auto cfg = make_config(0.5, 0.5, 0.01, 1.0, 50, 0.0);
    const auto s = constant_schedule(scalar(-0.5), 0.5, 0.01);
    const auto e = simulate_ensemble(models::exponential_example(), ControllerMode::smpc(s), cfg);
    const auto curve = mean_square_curve(e);
    for (double v : curve.estimate) EXPECT_EQ(v, 0.0);
    const auto c = stability_constants(scalar(1.0), testing::ex21_plant(), testing::ex21_weights(1.0));
    BoundParams p;
    p.n_paths = 50;
    const auto report = check_theorem_bound(curve, c, scalar(1.0), cfg.x0, Theorem::T2_1, p);
    EXPECT_EQ(report.violation_fraction, 0.0);
    EXPECT_EQ(report.verdict, Verdict::StableWithinBound);
    EXPECT_FALSE(report.fit.has_value());
}

GTEST_TEST(VerdictTest, Rules) {
    const auto curve = synthetic_curve(-2.0, 1.0, 0.01);
    BoundParams p;
    p.n_paths = 1000;
    std::vector<double> above(curve.estimate.size()), below(curve.estimate.size());
    for (std::size_t i = 0; i < above.size(); ++i) {
        above[i] = 2.0 * curve.estimate[i];
        below[i] = 0.5 * curve.estimate[i];
    }
    EXPECT_EQ(judge_against_bound(curve, above, p).verdict, Verdict::StableWithinBound);
    EXPECT_EQ(judge_against_bound(curve, below, p).verdict, Verdict::RateOnly);
    EXPECT_EQ(judge_against_bound(synthetic_curve(0.5, 1.0, 0.01), below, p).verdict, Verdict::BlowupSuspected);
    p.n_diverged = 11;
    EXPECT_EQ(judge_against_bound(curve, above, p).verdict, Verdict::BlowupSuspected);
    p.n_diverged = 10;
    EXPECT_EQ(judge_against_bound(curve, above, p).verdict, Verdict::StableWithinBound);
}

GTEST_TEST(VerdictTest, MonotoneInBound) {
    const auto curve = synthetic_curve(-2.0, 1.0, 0.02);
    BoundParams p;
    p.n_paths = 1000;
    double last = 1.0;
    for (double scale : {0.5, 0.8, 0.95, 1.0, 1.05, 2.0}) {
        std::vector<double> bound(curve.estimate.size());
        for (std::size_t i = 0; i < bound.size(); ++i) bound[i] = scale * curve.estimate[i] * std::exp(-0.1 * i / 200.0);
        const double v = judge_against_bound(curve, bound, p).violation_fraction;
        EXPECT_LE(v, last);
        last = v;
    }
}

GTEST_TEST(BoundTest, RatesAndCurves) {
    const auto c = stability_constants(scalar(1.0), testing::ex21_plant(), testing::ex21_weights(2.0));
    BoundParams p;
    p.T = 1.5;
    p.tau = 0.5;
    EXPECT_DOUBLE_EQ(theorem_rate(c, Theorem::T2_1, p), -1.375);
    EXPECT_DOUBLE_EQ(theorem_rate(c, Theorem::T2_3, p), -0.6875);
    EXPECT_NEAR(theorem_rate(c, Theorem::T2_2, p), -2.75 + 2.0 * std::exp(-2.75), 1e-12);
    p.L = 0.1;
    EXPECT_GT(theorem_rate(c, Theorem::T2_2, p), -2.75 + 2.0 * std::exp(-2.75));
    const auto c0 = stability_constants(scalar(1.0), testing::ex21_plant(), testing::ex21_weights(0.0));
    EXPECT_EQ(code_of([&] { theorem_rate(c0, Theorem::T2_2, p); }), ErrorCode::NotDominating);

    const TimeGrid grid(0.0, 0.5, 4);
    const auto b1 = theorem_bound_curve(grid, c, scalar(1.0), vec1(2.0), Theorem::T2_1, p);
    const auto b3 = theorem_bound_curve(grid, c, scalar(1.0), vec1(2.0), Theorem::T2_3, p);
    EXPECT_DOUBLE_EQ(b1[0], 4.0);
    EXPECT_DOUBLE_EQ(b3[0], 8.0);
    EXPECT_NEAR(b1[2], 4.0 * std::exp(-1.375), 1e-12);
    EXPECT_EQ(to_string(Theorem::T2_2), std::string("T2_2"));
    EXPECT_EQ(theorem_from_string("T2_3"), Theorem::T2_3);
}

GTEST_TEST(BoundTest, RhcEnsembleIsWithinBound) {
    const auto cfg = make_config(1.5, 0.5, 1e-3, 2.0, 4000);
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(1.0);
    const auto are = solve_are(plant, w);
    const auto s = synthesize_schedule(plant, w, are, 1.5, 0.5, 1e-3);
    const auto e = simulate_ensemble(models::exponential_example(), ControllerMode::rhc(s), cfg);
    BoundParams p;
    p.n_paths = e.n_paths;
    p.fit_t_a = 0.2;
    p.fit_t_b = 1.5;
    const auto report = check_theorem_bound(mean_square_curve(e), stability_constants(are.P_inf, plant, w),
                                            are.P_inf, cfg.x0, Theorem::T2_1, p);
    EXPECT_EQ(report.verdict, Verdict::StableWithinBound);
    ASSERT_TRUE(report.fit.has_value());
    EXPECT_NEAR(report.fit->rate, -2.75, 0.15);
}

GTEST_TEST(CostTest, StationaryGainGivesValueFunction) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights();
    const auto are = solve_are(plant, w);
    const auto s = constant_schedule(op_K(are.P_inf, plant, w), 0.5, 1e-3);
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> ud(-3.0, 3.0);
    for (int k = 0; k < 10; ++k) {
        const Vector x = vec1(ud(gen));
        const auto est = cost_lyapunov_linear(plant, w, s, x, 20.0);
        const double exact = 0.5 * x.dot(are.P_inf * x);
        EXPECT_NEAR(est.value, exact, 1e-6 * std::max(1.0, exact));
        EXPECT_GE(est.tail_bound, 0.0);
    }
    EXPECT_EQ(cost_lyapunov_linear(plant, w, s, vec1(0.0), 20.0).value, 0.0);
}

GTEST_TEST(CostTest, TwoDimensionalPlant) {
    LinearPlant plant{Matrix(2, 2), Matrix(2, 1), Matrix(2, 2), Matrix(2, 1)};
    plant.A << 0.2, 1.0, -0.5, -0.3;
    plant.B << 0.0, 1.0;
    plant.C << 0.1, 0.0, 0.0, 0.2;
    plant.D << 0.1, 0.0;
    const CostWeights w(Matrix::Identity(2, 2), scalar(0.5));
    const auto are = solve_are(plant, w);
    const auto s = constant_schedule(op_K(are.P_inf, plant, w), 0.5, 1e-3);
    Vector x(2);
    x << 1.0, -2.0;
    EXPECT_NEAR(cost_lyapunov_linear(plant, w, s, x, 40.0).value, 0.5 * x.dot(are.P_inf * x), 1e-6);
}

GTEST_TEST(CostTest, UnstableLoopIsReported) {
    const auto plant = testing::ex22_plant();
    const auto s = constant_schedule(scalar(0.0), 0.5, 1e-2);
    EXPECT_EQ(code_of([&] { cost_lyapunov_linear(plant, testing::ex22_weights(), s, vec1(1.0), 10.0); }),
              ErrorCode::UnstableClosedLoop);
}

GTEST_TEST(CostTest, MonteCarloAgreesWithLyapunov) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights(2.0);
    const auto are = solve_are(plant, w);
    const auto s = synthesize_schedule(plant, w, are, 1.5, 0.5, 1e-3);
    const auto cfg = make_config(1.5, 0.5, 1e-3, 5.0, 4000);
    SimulationOptions o;
    o.cost_weights = w;
    const auto e = simulate_ensemble(models::linear(plant), ControllerMode::rhc(s), cfg, o);
    const auto mc = cost_monte_carlo(e, w, s.theta_inf);
    const auto ly = cost_lyapunov_linear(plant, w, s, cfg.x0, 5.0);
    EXPECT_EQ(mc.method, CostMethod::MonteCarloTruncated);
    EXPECT_NEAR(mc.value, ly.value, 4.0 * mc.std_error + 5e-3 * ly.value);
    EXPECT_GE(ly.value, 0.5 - 1e-9);
}

GTEST_TEST(GapTest, ShrinksWithHorizon) {
    const auto study = suboptimality_gap_study(testing::ex21_plant(), testing::ex21_weights(2.0),
                                               {0.25, 0.5, 1.0}, 0.25, vec1(1.0), 1e-3, 20.0);
    EXPECT_DOUBLE_EQ(study.optimal_cost, 0.5 * solve_are(testing::ex21_plant(), testing::ex21_weights()).P_inf(0, 0));
    EXPECT_TRUE(study.nonnegative);
    EXPECT_TRUE(study.decreasing);
    ASSERT_TRUE(study.last_slope.has_value());
    EXPECT_LE(*study.last_slope, -2.75);
}

GTEST_TEST(LipschitzTest, ErrorGrowsQuadratically) {
    const auto cfg = make_config(1.0, 0.5, 1e-2, 2.0, 2000);
    const auto sweep = lipschitz_sweep(testing::ex21_plant(), testing::ex21_weights(1.0), cfg, {0.02, 0.05, 0.1});
    ASSERT_EQ(sweep.rows.size(), 3u);
    EXPECT_TRUE(sweep.rate_monotone);
    ASSERT_TRUE(sweep.error_order.has_value());
    EXPECT_NEAR(*sweep.error_order, 2.0, 0.3);
    for (const auto& row : sweep.rows) EXPECT_EQ(row.diverged_fraction, 0.0);
}

// E[exp(0.5 e^{-W/2}) 1{|W| <= c}], W ~ N(0, 1/2), by adaptive Gauss-Kronrod.
double truncated_moment(double c) {
    auto f = [](double w) { return std::exp(0.5 * std::exp(-0.5 * w) - w * w) / std::sqrt(M_PI); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -c, c, 15, 1e-12);
}

GTEST_TEST(BlowupTest, TruncatedMomentGrowsWithoutBound) {
    double prev = 0.0;
    for (double c = 2.0; c <= 14.0; c += 1.0) {
        const double v = truncated_moment(c);
        EXPECT_GE(v, prev * (1.0 - 1e-12)) << "c = " << c;
        prev = v;
    }
    // Reference values from a 30-digit quadrature.
    EXPECT_NEAR(truncated_moment(6.0), 1.7378806300953370, 1e-9);
    EXPECT_NEAR(truncated_moment(12.0) / 8.5979583944926268e22, 1.0, 1e-6);
    EXPECT_NEAR(truncated_moment(14.0) / 2.3460021710677893e150, 1.0, 1e-6);
}

GTEST_TEST(BlowupTest, LinearSystemIsNotFlagged) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights();
    const auto are = solve_are(plant, w);
    const auto cfg = make_config(0.5, 0.5, 1e-3, 0.5, 1, -1.0);
    const auto s = synthesize_schedule(plant, w, are, 0.5, 0.5, 1e-3);
    const auto r = blowup_probe(models::linear(plant), ControllerMode::smpc(s), cfg, 0.25,
                                {{ProbeObservable::ControlDrift, 1.0}, {ProbeObservable::StateNorm, 2.0}});
    EXPECT_FALSE(r.any_flagged);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].estimates.size(), 3u);
    EXPECT_EQ(r.rows[0].ratios.size(), 2u);
}

GTEST_TEST(BlowupTest, ExponentialControlIsFlaggedFromFarStart) {
    const auto plant = testing::ex21_plant();
    const auto w = testing::ex21_weights();
    const auto are = solve_are(plant, w);
    const auto cfg = make_config(0.5, 0.5, 1e-3, 0.5, 1, -48.0);
    const auto s = synthesize_schedule(plant, w, are, 0.5, 0.5, 1e-3);
    const auto r = blowup_probe(models::exponential_example(), ControllerMode::smpc(s), cfg, 0.25,
                                {{ProbeObservable::ControlDrift, 1.0}});
    EXPECT_TRUE(r.any_flagged);
}

GTEST_TEST(BlowupTest, RejectsBadSizes) {
    const auto s = constant_schedule(scalar(-0.5), 0.5, 1e-2);
    const auto cfg = make_config(0.5, 0.5, 1e-2, 0.5, 1);
    EXPECT_EQ(code_of([&] {
                  blowup_probe(models::exponential_example(), ControllerMode::smpc(s), cfg, 0.2, {{}}, {100, 10});
              }),
              ErrorCode::ValidationError);
}

} // namespace
} // namespace smpc_lab
