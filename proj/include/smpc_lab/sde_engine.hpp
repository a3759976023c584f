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
#include <optional>
#include <vector>

#include "smpc_lab/core_types.hpp"
#include "smpc_lab/smpc.hpp"

namespace smpc_lab {

/// Increments of the scalar Brownian motion driving path `path_id`.
struct BrownianPath {
    TimeGrid grid;
    std::vector<double> increments;   ///< dW_i = W(t_{i+1}) - W(t_i) ~ N(0, h)
    std::uint64_t path_id = 0;
    std::uint64_t seed = 0;

    static BrownianPath generate(std::uint64_t seed, std::uint64_t path_id, const TimeGrid& grid);
    /// W(t_i).
    double value(std::size_t i) const;
};

/// Physical state y, plant prediction x_pred, applied control u and the
/// prediction error eps = x_pred - y at every grid node.
struct CoupledTrajectory {
    TimeGrid grid;
    std::vector<Vector> y;
    std::vector<Vector> x_pred;
    std::vector<Vector> u;
    std::vector<Vector> eps;
    std::optional<double> exit_time;
    bool diverged = false;
    std::optional<double> divergence_time;   ///< first node with a non-finite state
};

struct SimulationOptions {
    /// Stops the process at the first node with |y| >= r.
    std::optional<double> exit_radius;
    /// Accumulates the trapezoidal stage cost 1/2 int (y'Qy + u'Ru) dt per path.
    std::optional<CostWeights> cost_weights;
    bool keep_trajectories = false;
    /// Records y and u of every path at this time.
    std::optional<double> probe_time;
    /// Worker count; 0 reads SMPC_LAB_THREADS, then the hardware concurrency.
    unsigned threads = 0;
};

/// Per-node running mean and second central moment (Welford), merged with
/// the pairwise update of Chan et al.
class MomentAccumulator {
public:
    MomentAccumulator() = default;
    explicit MomentAccumulator(std::size_t n_nodes);

    void add(std::size_t node, double value);
    void merge(const MomentAccumulator& other);

    std::size_t size() const { return count_.size(); }
    std::size_t count(std::size_t node) const { return count_[node]; }
    double mean(std::size_t node) const { return mean_[node]; }
    /// Unbiased sample variance; zero below two samples.
    double variance(std::size_t node) const;

private:
    std::vector<std::size_t> count_;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

struct ProbeSample {
    Vector y;
    Vector u;
};

struct PathEnsemble {
    SmpcConfig config;
    ControllerKind mode = ControllerKind::Smpc;
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::size_t n_diverged = 0;
    std::size_t n_exited = 0;
    MomentAccumulator state_sq;   ///< |y|^2 over non-diverged paths
    MomentAccumulator error_sq;   ///< |eps|^2 over non-diverged paths
    MomentAccumulator cost;       ///< single node; empty unless cost weights were given
    double max_abs_error = 0.0;   ///< max |eps| over nodes and non-diverged paths
    std::vector<CoupledTrajectory> trajectories;
    std::vector<ProbeSample> probe;   ///< indexed by path id when a probe time is set

    double diverged_fraction() const {
        return n_paths == 0 ? 0.0 : static_cast<double>(n_diverged) / static_cast<double>(n_paths);
    }
};

/// Euler-Maruyama on the coupled system. One shared increment per step
/// drives y (through the model's b and sigma, or through the linear plant in
/// Rhc mode) and x_pred (through the linear plant). x_pred is reset to y at
/// every sampling instant k tau.
CoupledTrajectory simulate_path(const NonlinearModel& model, const ControllerMode& mode, const SmpcConfig& config,
                                std::uint64_t path_id, const SimulationOptions& options = {});

/// Paths 0..n_paths-1 in fixed blocks of 64; block results are merged in
/// block order, so the output does not depend on the worker count.
PathEnsemble simulate_ensemble(const NonlinearModel& model, const ControllerMode& mode, const SmpcConfig& config,
                               const SimulationOptions& options = {});

struct FundamentalEnsemble {
    TimeGrid grid;
    std::size_t n_paths = 0;
    MomentAccumulator norm_sq;   ///< |Phi(t)|^2, spectral norm
};

/// Euler-Maruyama on dPhi = A Phi dt + C Phi dW from Phi(0) = I. Uses
/// config.h, t_end, n_paths and seed.
FundamentalEnsemble simulate_fundamental(const Matrix& A_cl, const Matrix& C_cl, const SmpcConfig& config);

struct GronwallCheck {
    bool holds = false;
    TimeGrid grid;
    std::vector<double> y;
    std::vector<double> bound;   ///< 2 y0 e^{-k t / 2}
    double max_excess = 0.0;     ///< max of y - bound
};

/// Explicit Euler on y' = -(k - r) y + r y(tau_t), tau_t = t - (t mod tau),
/// checked against 2 y0 e^{-k t / 2} with slack 1e-6. Throws
/// PreconditionViolated unless k > 0, y0 > 0 and 0 < r <= min(1/tau, k/4).
GronwallCheck gronwall_delay_check(double k, double r, double tau, double y0, double t_end, double h);

/// Worker count from SMPC_LAB_THREADS or the hardware.
unsigned default_thread_count();

} // namespace smpc_lab
