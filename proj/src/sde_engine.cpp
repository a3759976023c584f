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

#include "smpc_lab/sde_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "smpc_lab/random.hpp"

namespace smpc_lab {

namespace {

constexpr std::size_t kBlockSize = 64;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(block) for every block on `threads` workers; the first exception
// thrown by any worker is rethrown after all workers have joined.
template <class Fn>
void for_each_block(std::size_t n_blocks, unsigned threads, Fn&& fn) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_blocks)));
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
                try {
                    fn(b);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(n_blocks);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

void linear_advance(const LinearPlant& p, const Vector& x, const Vector& u, double h, double dW, Vector& drift,
                    Vector& diffusion, Vector& out) {
    drift.noalias() = p.A * x;
    drift.noalias() += p.B * u;
    diffusion.noalias() = p.C * x;
    diffusion.noalias() += p.D * u;
    out = x + h * drift + dW * diffusion;
}

struct PathSetup {
    const NonlinearModel& model;
    const ControllerMode& mode;
    const SmpcConfig& config;
    const SimulationOptions& options;
    TimeGrid grid;
    std::size_t n_c = 0;
    double sqrt_h = 0.0;
    std::optional<std::size_t> probe_node;
};

struct Workspace {
    Vector y, x, u, f, g, y_next, x_next;
    std::vector<double> y_sq, e_sq;

    Workspace(Eigen::Index n, Eigen::Index m, std::size_t n_nodes)
        : y(n), x(n), u(m), f(n), g(n), y_next(n), x_next(n), y_sq(n_nodes), e_sq(n_nodes) {}
};

struct PathOutcome {
    bool diverged = false;
    bool exited = false;
    double cost = 0.0;
    double max_abs_error = 0.0;
    ProbeSample probe;
};

PathSetup make_setup(const NonlinearModel& model, const ControllerMode& mode, const SmpcConfig& config,
                     const SimulationOptions& options) {
    validate_config(config);
    validate_model(model);
    const LinearPlant& plant = model.linearization;
    if (config.x0.size() != plant.n()) {
        throw Error(ErrorCode::DimensionMismatch, "x0 has " + std::to_string(config.x0.size()) +
                                                      " entries, the model has " + std::to_string(plant.n()));
    }
    PathSetup setup{model, mode, config, options, config.simulation_grid(), config.steps_per_cycle(),
                    std::sqrt(config.h), std::nullopt};
    const GainSchedule& s = mode.schedule;
    if (s.steps_per_cycle() != setup.n_c || std::abs(s.h - config.h) > kGridTolerance * config.h) {
        throw Error(ErrorCode::ValidationError, "gain schedule grid does not match tau and h");
    }
    if (s.theta_inf.rows() != plant.m() || s.theta_inf.cols() != plant.n()) {
        throw Error(ErrorCode::DimensionMismatch, "gain schedule does not match the plant dimensions");
    }
    if (options.probe_time) setup.probe_node = setup.grid.index_of(*options.probe_time);
    if (options.cost_weights) options.cost_weights->check_compatible(plant);
    if (options.exit_radius && !(*options.exit_radius > 0.0)) {
        throw Error(ErrorCode::ValidationError, "exit_radius must be positive");
    }
    return setup;
}

void fill_invalid(CoupledTrajectory& traj, std::size_t from, Eigen::Index n, Eigen::Index m) {
    const Vector nan_n = Vector::Constant(n, kNaN);
    const Vector nan_m = Vector::Constant(m, kNaN);
    for (std::size_t i = from; i < traj.y.size(); ++i) {
        traj.y[i] = nan_n;
        traj.x_pred[i] = nan_n;
        traj.u[i] = nan_m;
        traj.eps[i] = nan_n;
    }
}

// One Euler-Maruyama path. Fills ws.y_sq / ws.e_sq for every node reached and
// the full trajectory when `traj` is non-null.
PathOutcome run_path(const PathSetup& setup, std::uint64_t path_id, Workspace& ws, CoupledTrajectory* traj) {
    const LinearPlant& plant = setup.model.linearization;
    const ControllerKind kind = setup.mode.kind;
    const double h = setup.config.h;
    const std::size_t n_steps = setup.grid.n_steps;
    const NormalStream stream(setup.config.seed, path_id);
    const CostWeights* cost = setup.options.cost_weights ? &*setup.options.cost_weights : nullptr;

    if (traj) {
        traj->grid = setup.grid;
        traj->y.resize(setup.grid.n_nodes());
        traj->x_pred.resize(setup.grid.n_nodes());
        traj->u.resize(setup.grid.n_nodes());
        traj->eps.resize(setup.grid.n_nodes());
    }

    PathOutcome out;
    ws.y = setup.config.x0;
    ws.x = setup.config.x0;
    bool frozen = false;
    double stage_prev = 0.0;
    for (std::size_t i = 0;; ++i) {
        const std::size_t s = i % setup.n_c;
        if (!frozen) {
            const bool reset = kind == ControllerKind::StaticAre || (kind == ControllerKind::OpenLoop && i == 0) ||
                               ((kind == ControllerKind::Smpc || kind == ControllerKind::Rhc) && s == 0);
            if (reset) ws.x = ws.y;
            const Vector& fed = kind == ControllerKind::StaticAre ? ws.y : ws.x;
            ws.u.noalias() = setup.mode.gain_at_node(s) * fed;
        }

        const double y_sq = ws.y.squaredNorm();
        const double e_sq = (ws.x - ws.y).squaredNorm();
        ws.y_sq[i] = y_sq;
        ws.e_sq[i] = e_sq;
        out.max_abs_error = std::max(out.max_abs_error, std::sqrt(e_sq));
        if (traj) {
            traj->y[i] = ws.y;
            traj->x_pred[i] = ws.x;
            traj->u[i] = ws.u;
            traj->eps[i] = ws.x - ws.y;
        }
        if (setup.probe_node && *setup.probe_node == i) out.probe = {ws.y, ws.u};
        if (cost) {
            const double stage = 0.5 * (ws.y.dot(cost->Q() * ws.y) + ws.u.dot(cost->R() * ws.u));
            if (i > 0) out.cost += 0.5 * h * (stage_prev + stage);
            stage_prev = stage;
        }
        if (setup.options.exit_radius && !frozen && std::sqrt(y_sq) >= *setup.options.exit_radius) {
            frozen = true;
            out.exited = true;
            if (traj) traj->exit_time = setup.grid.t(i);
        }
        if (i == n_steps) break;
        if (frozen) continue;

        const double dW = setup.sqrt_h * stream.normal(i);
        linear_advance(plant, ws.x, ws.u, h, dW, ws.f, ws.g, ws.x_next);
        if (kind == ControllerKind::Rhc) {
            linear_advance(plant, ws.y, ws.u, h, dW, ws.f, ws.g, ws.y_next);
        } else {
            setup.model.drift(ws.y, ws.u, ws.f);
            setup.model.diffusion(ws.y, ws.u, ws.g);
            ws.y_next = ws.y + h * ws.f + dW * ws.g;
        }
        ws.y.swap(ws.y_next);
        ws.x.swap(ws.x_next);
        if (!std::isfinite(ws.y.squaredNorm()) || !ws.x.allFinite()) {
            out.diverged = true;
            if (traj) {
                traj->diverged = true;
                traj->divergence_time = setup.grid.t(i + 1);
                fill_invalid(*traj, i + 1, plant.n(), plant.m());
            }
            if (setup.probe_node && *setup.probe_node > i) {
                out.probe = {Vector::Constant(plant.n(), kNaN), Vector::Constant(plant.m(), kNaN)};
            }
            break;
        }
    }
    return out;
}

struct BlockResult {
    MomentAccumulator state_sq;
    MomentAccumulator error_sq;
    MomentAccumulator cost;
    std::size_t diverged = 0;
    std::size_t exited = 0;
    double max_abs_error = 0.0;
    std::vector<CoupledTrajectory> trajectories;
    std::vector<ProbeSample> probe;
};

} // namespace

unsigned default_thread_count() {
    if (const char* env = std::getenv("SMPC_LAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

BrownianPath BrownianPath::generate(std::uint64_t seed, std::uint64_t path_id, const TimeGrid& grid) {
    BrownianPath path;
    path.grid = grid;
    path.path_id = path_id;
    path.seed = seed;
    const NormalStream stream(seed, path_id);
    const double sqrt_h = std::sqrt(grid.h);
    path.increments.resize(grid.n_steps);
    for (std::size_t i = 0; i < grid.n_steps; ++i) path.increments[i] = sqrt_h * stream.normal(i);
    return path;
}

double BrownianPath::value(std::size_t i) const {
    double w = 0.0;
    for (std::size_t k = 0; k < i; ++k) w += increments[k];
    return w;
}

MomentAccumulator::MomentAccumulator(std::size_t n_nodes) : count_(n_nodes, 0), mean_(n_nodes, 0.0), m2_(n_nodes, 0.0) {}

void MomentAccumulator::add(std::size_t node, double value) {
    const std::size_t c = ++count_[node];
    const double delta = value - mean_[node];
    mean_[node] += delta / static_cast<double>(c);
    m2_[node] += delta * (value - mean_[node]);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
    if (count_.empty()) {
        *this = other;
        return;
    }
    if (other.size() != size()) {
        throw Error(ErrorCode::DimensionMismatch, "merging accumulators of different lengths");
    }
    for (std::size_t i = 0; i < count_.size(); ++i) {
        const std::size_t nb = other.count_[i];
        if (nb == 0) continue;
        const std::size_t na = count_[i];
        const double n = static_cast<double>(na + nb);
        const double delta = other.mean_[i] - mean_[i];
        mean_[i] += delta * static_cast<double>(nb) / n;
        m2_[i] += other.m2_[i] + delta * delta * static_cast<double>(na) * static_cast<double>(nb) / n;
        count_[i] = na + nb;
    }
}

double MomentAccumulator::variance(std::size_t node) const {
    return count_[node] < 2 ? 0.0 : m2_[node] / static_cast<double>(count_[node] - 1);
}

CoupledTrajectory simulate_path(const NonlinearModel& model, const ControllerMode& mode, const SmpcConfig& config,
                                std::uint64_t path_id, const SimulationOptions& options) {
    const PathSetup setup = make_setup(model, mode, config, options);
    Workspace ws(model.linearization.n(), model.linearization.m(), setup.grid.n_nodes());
    CoupledTrajectory traj;
    run_path(setup, path_id, ws, &traj);
    return traj;
}

PathEnsemble simulate_ensemble(const NonlinearModel& model, const ControllerMode& mode, const SmpcConfig& config,
                               const SimulationOptions& options) {
    const PathSetup setup = make_setup(model, mode, config, options);
    const std::size_t n_nodes = setup.grid.n_nodes();

    PathEnsemble ensemble;
    ensemble.config = config;
    ensemble.mode = mode.kind;
    ensemble.grid = setup.grid;
    ensemble.n_paths = config.n_paths;
    ensemble.state_sq = MomentAccumulator(n_nodes);
    ensemble.error_sq = MomentAccumulator(n_nodes);
    if (options.cost_weights) ensemble.cost = MomentAccumulator(1);
    if (config.n_paths == 0) return ensemble;

    const std::size_t n_blocks = (config.n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<BlockResult> blocks(n_blocks);
    const unsigned threads = options.threads ? options.threads : default_thread_count();
    for_each_block(n_blocks, threads, [&](std::size_t b) {
        BlockResult& r = blocks[b];
        r.state_sq = MomentAccumulator(n_nodes);
        r.error_sq = MomentAccumulator(n_nodes);
        if (options.cost_weights) r.cost = MomentAccumulator(1);
        Workspace ws(model.linearization.n(), model.linearization.m(), n_nodes);
        const std::size_t first = b * kBlockSize;
        const std::size_t last = std::min(config.n_paths, first + kBlockSize);
        for (std::size_t p = first; p < last; ++p) {
            CoupledTrajectory traj;
            const PathOutcome o = run_path(setup, p, ws, options.keep_trajectories ? &traj : nullptr);
            if (options.keep_trajectories) r.trajectories.push_back(std::move(traj));
            if (setup.probe_node) r.probe.push_back(o.probe);
            if (o.exited) ++r.exited;
            if (o.diverged) {
                ++r.diverged;
                continue;
            }
            for (std::size_t i = 0; i < n_nodes; ++i) {
                r.state_sq.add(i, ws.y_sq[i]);
                r.error_sq.add(i, ws.e_sq[i]);
            }
            if (options.cost_weights) r.cost.add(0, o.cost);
            r.max_abs_error = std::max(r.max_abs_error, o.max_abs_error);
        }
    });

    for (BlockResult& r : blocks) {
        ensemble.state_sq.merge(r.state_sq);
        ensemble.error_sq.merge(r.error_sq);
        if (options.cost_weights) ensemble.cost.merge(r.cost);
        ensemble.n_diverged += r.diverged;
        ensemble.n_exited += r.exited;
        ensemble.max_abs_error = std::max(ensemble.max_abs_error, r.max_abs_error);
        for (auto& t : r.trajectories) ensemble.trajectories.push_back(std::move(t));
        for (auto& s : r.probe) ensemble.probe.push_back(std::move(s));
    }
    return ensemble;
}

FundamentalEnsemble simulate_fundamental(const Matrix& A_cl, const Matrix& C_cl, const SmpcConfig& config) {
    if (A_cl.rows() != A_cl.cols() || C_cl.rows() != A_cl.rows() || C_cl.cols() != A_cl.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "closed-loop matrices must be square and of equal size");
    }
    const TimeGrid grid = config.simulation_grid();
    const std::size_t n_nodes = grid.n_nodes();
    const Eigen::Index n = A_cl.rows();
    const double h = config.h;
    const double sqrt_h = std::sqrt(h);

    FundamentalEnsemble out;
    out.grid = grid;
    out.n_paths = config.n_paths;
    out.norm_sq = MomentAccumulator(n_nodes);
    if (config.n_paths == 0) return out;

    const std::size_t n_blocks = (config.n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<MomentAccumulator> blocks(n_blocks);
    for_each_block(n_blocks, default_thread_count(), [&](std::size_t b) {
        MomentAccumulator acc(n_nodes);
        Matrix phi(n, n), drift(n, n), diffusion(n, n);
        const std::size_t last = std::min(config.n_paths, (b + 1) * kBlockSize);
        for (std::size_t p = b * kBlockSize; p < last; ++p) {
            const NormalStream stream(config.seed, p);
            phi.setIdentity();
            for (std::size_t i = 0;; ++i) {
                const double norm = spectral_norm(phi);
                acc.add(i, norm * norm);
                if (i == grid.n_steps) break;
                const double dW = sqrt_h * stream.normal(i);
                drift.noalias() = A_cl * phi;
                diffusion.noalias() = C_cl * phi;
                phi += h * drift + dW * diffusion;
            }
        }
        blocks[b] = std::move(acc);
    });
    for (const auto& acc : blocks) out.norm_sq.merge(acc);
    return out;
}

GronwallCheck gronwall_delay_check(double k, double r, double tau, double y0, double t_end, double h) {
    if (!(k > 0.0) || !(y0 > 0.0) || !(tau > 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "need k > 0, y0 > 0 and tau > 0");
    }
    const double r_max = std::min(1.0 / tau, k / 4.0);
    if (!(r > 0.0) || r > r_max * (1.0 + 1e-12)) {
        throw Error(ErrorCode::PreconditionViolated,
                    "r = " + format_number(r) + " outside (0, min(1/tau, k/4)] = (0, " + format_number(r_max) + "]");
    }
    const std::size_t n_c = whole_steps(tau, h, "tau");
    GronwallCheck check;
    check.grid = TimeGrid(0.0, h, whole_steps(t_end, h, "t_end"));
    const std::size_t n_nodes = check.grid.n_nodes();
    check.y.resize(n_nodes);
    check.bound.resize(n_nodes);
    check.y[0] = y0;
    for (std::size_t i = 0; i + 1 < n_nodes; ++i) {
        const double delayed = check.y[(i / n_c) * n_c];
        check.y[i + 1] = check.y[i] + h * (-(k - r) * check.y[i] + r * delayed);
    }
    check.holds = true;
    check.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_nodes; ++i) {
        check.bound[i] = 2.0 * y0 * std::exp(-0.5 * k * check.grid.t(i));
        const double excess = check.y[i] - check.bound[i];
        check.max_excess = std::max(check.max_excess, excess);
        if (excess > 1e-6) check.holds = false;
    }
    return check;
}

} // namespace smpc_lab
