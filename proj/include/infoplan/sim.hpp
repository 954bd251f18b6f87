#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "infoplan/belief.hpp"
#include "infoplan/mpc.hpp"
#include "infoplan/planners.hpp"
#include "infoplan/world.hpp"

namespace infoplan {

struct EpisodeConfig {
  double beta = 0.9;
  int t_max = 640;
  int steps_per_action = 5;    // N_a: timesteps between viewpoint updates
  double step_penalty = -0.1;  // r_pen, added once per policy step
  std::uint64_t seed = 0;      // start pose and observation noise
  SensorModel sensor;
  double d_max = 5.0;
  MpcConfig mpc;
};

struct StepRecord {
  int t = 0;
  RobotState state;  // at observation time
  Vec2 p_ref;        // reference active for this step's control
  double info_gain_bits = 0.0;
  double entropy_remaining_bits = 0.0;
};

struct EpisodeResult {
  double cumulative_reward = 0.0;
  int n_steps = 0;
  bool completed = false;
  bool failure = false;
  double completion_time_s = 0.0;
  int policy_steps = 0;
  int planner_calls = 0;
  double planner_runtime_total_s = 0.0;
  double total_info_gain_bits = 0.0;
  double initial_entropy_bits = 0.0;
  double final_entropy_bits = 0.0;
  std::vector<StepRecord> step_log;

  double planner_runtime_mean_s() const {
    return planner_calls > 0 ? planner_runtime_total_s / planner_calls : 0.0;
  }
};

// Snapshot handed to an optional per-step observer (rendering hook). Emitted
// at the top of each timestep, before that step's observation is applied.
struct EpisodeFrame {
  int t = 0;
  const WorldMap* world = nullptr;
  const BeliefMap* belief = nullptr;
  RobotState state;
  Vec2 p_ref;
  const std::vector<StepRecord>* step_log = nullptr;
};

using FrameObserver = std::function<void(const EpisodeFrame&)>;

// Closed loop: observe and update the belief every timestep, refresh the
// viewpoint reference every N_a steps, track it with the receding-horizon
// optimizer, stop at coverage or at the step budget.
inline EpisodeResult run_episode(const WorldMap& world,
                                 const GroundTruthTargets& targets,
                                 Planner& planner, const EpisodeConfig& cfg,
                                 const FrameObserver& observer = {}) {
  Rng rng(cfg.seed);
  const auto free = free_cells(world);
  BeliefMap belief = init_uniform(world);

  RobotState state;
  {
    const Vec2 start = sample_start_position(world, cfg.mpc.robot_radius, rng);
    state.x = start.x;
    state.y = start.y;
    state.psi = uniform_range(rng, -M_PI, M_PI);
  }

  auto obstacle_and_boundary = [&](const Vec2& p) {
    auto cs = closest_obstacle_constraints(world, p, cfg.mpc.n_obs);
    const auto edges = map_boundary_constraints(world);
    cs.insert(cs.end(), edges.begin(), edges.end());
    return cs;
  };

  EpisodeResult result;
  result.initial_entropy_bits = static_cast<double>(free.size());
  Vec2 p_ref = state.position();
  std::optional<std::vector<ControlInput>> warm;
  double remaining = result.initial_entropy_bits;

  for (int t = 0; t < cfg.t_max; ++t) {
    if (observer)
      observer({t, &world, &belief, state, p_ref, &result.step_log});

    // Observe and update.
    const auto visible = visible_cells(world, state.position(), cfg.d_max);
    const Observation obs = simulate_observation(targets, visible, cfg.sensor, rng);
    double gain = 0.0;
    {
      std::vector<double> h_before(obs.cells.size());
      for (std::size_t i = 0; i < obs.cells.size(); ++i)
        h_before[i] = cell_entropy(belief.probability(obs.cells[i]));
      update_in_place(belief, obs, cfg.sensor);
      for (std::size_t i = 0; i < obs.cells.size(); ++i)
        gain += h_before[i] - cell_entropy(belief.probability(obs.cells[i]));
    }
    result.total_info_gain_bits += gain;
    remaining = free_space_entropy(belief, free);
    result.n_steps = t + 1;

    const bool done = coverage_reached(belief, free, cfg.beta);

    if (!done && t % cfg.steps_per_action == 0) {
      const auto t0 = std::chrono::steady_clock::now();
      p_ref = planner.recommend(
          {world, belief, state, cfg.sensor, cfg.d_max});
      const auto t1 = std::chrono::steady_clock::now();
      result.planner_runtime_total_s +=
          std::chrono::duration<double>(t1 - t0).count();
      result.planner_calls += 1;
    }

    result.step_log.push_back({t, state, p_ref, gain, remaining});

    if (done) {
      result.completed = true;
      break;
    }

    const MpcSolution sol =
        solve(state, p_ref, obstacle_and_boundary(state.position()), warm,
              cfg.mpc);
    warm = sol.inputs;
    state = step(state, sol.inputs.front(), cfg.mpc.dt, cfg.mpc.limits);
  }

  result.failure = !result.completed;
  result.completion_time_s = result.n_steps * cfg.mpc.dt;
  result.final_entropy_bits = remaining;
  result.policy_steps =
      (result.n_steps + cfg.steps_per_action - 1) / cfg.steps_per_action;
  result.cumulative_reward =
      result.total_info_gain_bits + result.policy_steps * cfg.step_penalty;
  return result;
}

// Post-hoc collision check over a logged trajectory. A violation is a
// penetration deeper than the solver's feasibility tolerance.
inline int safety_audit(const std::vector<StepRecord>& step_log,
                        const WorldMap& world, double robot_radius,
                        double tol = 1e-3) {
  int violations = 0;
  for (const auto& rec : step_log)
    if (world.obstacle_clearance(rec.state.position()) < robot_radius - tol)
      ++violations;
  return violations;
}

// Named planner factory; a fresh instance is built per episode so parallel
// episodes never share RNG state.
struct PlannerSpec {
  std::string name;
  std::function<std::unique_ptr<Planner>(std::uint64_t seed)> make;
};

struct BenchmarkConfig {
  std::vector<int> obstacle_counts = {1, 2, 3};
  int n_maps = 100;
  std::uint64_t base_seed = 1;
  int workers = 1;
  double target_density = 0.1;
  GenConfig gen;
  EpisodeConfig episode;  // per-episode seed is derived, the field is ignored
};

struct BenchmarkCell {
  std::string planner;
  int n_obstacles = 0;
  std::vector<EpisodeResult> episodes;  // ordered by map index
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double failure_pct = 0.0;
  double completion_time_mean_s = 0.0;
  double planner_runtime_mean_s = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkCell> cells;  // planner-major, then obstacle count
  std::vector<std::uint64_t> world_seeds;
};

namespace detail {

inline void finalize_cell(BenchmarkCell& cell) {
  const std::size_t n = cell.episodes.size();
  if (n == 0) return;
  double sum = 0.0, time_sum = 0.0, runtime_sum = 0.0;
  int failures = 0, calls = 0;
  for (const auto& e : cell.episodes) {
    sum += e.cumulative_reward;
    time_sum += e.completion_time_s;
    runtime_sum += e.planner_runtime_total_s;
    calls += e.planner_calls;
    failures += e.failure ? 1 : 0;
  }
  cell.reward_mean = sum / n;
  double sq = 0.0;
  for (const auto& e : cell.episodes) {
    const double d = e.cumulative_reward - cell.reward_mean;
    sq += d * d;
  }
  cell.reward_std = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
  cell.failure_pct = 100.0 * failures / n;
  cell.completion_time_mean_s = time_sum / n;
  cell.planner_runtime_mean_s = calls > 0 ? runtime_sum / calls : 0.0;
}

}  // namespace detail

// Paired benchmark: every planner sees bitwise-identical worlds, targets and
// episode seeds for a given (obstacle count, map index). Episodes may run on
// a worker pool; results are keyed by task index, so aggregation order is
// independent of scheduling.
inline BenchmarkReport run_benchmark(const std::vector<PlannerSpec>& planners,
                                     const BenchmarkConfig& cfg) {
  if (cfg.n_maps < 1)
    throw std::invalid_argument("run_benchmark: n_maps must be >= 1");
  struct Task {
    std::size_t planner;
    std::size_t count_idx;
    int map_idx;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < planners.size(); ++p)
    for (std::size_t c = 0; c < cfg.obstacle_counts.size(); ++c)
      for (int m = 0; m < cfg.n_maps; ++m) tasks.push_back({p, c, m});

  std::vector<EpisodeResult> results(tasks.size());
  auto run_task = [&](std::size_t i) {
    const Task& task = tasks[i];
    const std::uint64_t world_seed = cfg.base_seed + task.map_idx;
    const WorldMap world = generate_random_environment(
        world_seed, cfg.obstacle_counts[task.count_idx], cfg.gen);
    const GroundTruthTargets targets =
        sample_targets(world, mix_seed(world_seed, 101), cfg.target_density);
    EpisodeConfig ep = cfg.episode;
    ep.seed = mix_seed(world_seed, 202);
    auto planner = planners[task.planner].make(mix_seed(world_seed, 303));
    results[i] = run_episode(world, targets, *planner, ep);
  };

  const int workers = std::max(1, cfg.workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size();
             i = next.fetch_add(1))
          run_task(i);
      });
    for (auto& th : pool) th.join();
  }

  BenchmarkReport report;
  for (int m = 0; m < cfg.n_maps; ++m)
    report.world_seeds.push_back(cfg.base_seed + m);
  for (std::size_t p = 0; p < planners.size(); ++p) {
    for (std::size_t c = 0; c < cfg.obstacle_counts.size(); ++c) {
      BenchmarkCell cell;
      cell.planner = planners[p].name;
      cell.n_obstacles = cfg.obstacle_counts[c];
      for (std::size_t i = 0; i < tasks.size(); ++i)
        if (tasks[i].planner == p && tasks[i].count_idx == c)
          cell.episodes.push_back(results[i]);
      detail::finalize_cell(cell);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace infoplan
