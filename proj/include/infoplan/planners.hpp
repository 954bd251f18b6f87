#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "infoplan/belief.hpp"
#include "infoplan/mpc.hpp"
#include "infoplan/rng.hpp"
#include "infoplan/world.hpp"

namespace infoplan {

struct NoFeasiblePrimitive : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Viewpoint increment relative to the robot position, bounded by the
// inf-norm action square.
struct ViewpointAction {
  Vec2 delta;
};

inline ViewpointAction clip_action(const Vec2& delta, double delta_max) {
  return {{std::clamp(delta.x, -delta_max, delta_max),
           std::clamp(delta.y, -delta_max, delta_max)}};
}

struct GreedyConfig {
  int n_candidates = 30;
  double delta_max = 4.0;
};

// Candidate-level breakdown of one greedy evaluation, for inspection.
struct GreedyEvaluation {
  std::vector<Vec2> candidates;
  std::vector<double> scores;  // -1 for discarded candidates
  std::vector<std::uint8_t> valid;
  int chosen = -1;
};

// One-step next-best-view: sample candidates uniformly in the action square,
// drop those outside the map or inside obstacles, return the one with the
// highest expected MI (ties to the lowest index). Falls back to the current
// position when every candidate is invalid.
inline Vec2 greedy_next_best_view(const BeliefMap& belief, const WorldMap& world,
                                  const Vec2& position, const SensorModel& sensor,
                                  double d_max, const GreedyConfig& cfg, Rng& rng,
                                  GreedyEvaluation* eval = nullptr) {
  Vec2 best = position;
  double best_score = -1.0;
  int best_index = -1;
  if (eval) *eval = {};
  for (int i = 0; i < cfg.n_candidates; ++i) {
    const Vec2 delta{uniform_range(rng, -cfg.delta_max, cfg.delta_max),
                     uniform_range(rng, -cfg.delta_max, cfg.delta_max)};
    const Vec2 cand = position + delta;
    const bool ok = world.in_bounds(cand) && !world.point_in_obstacle(cand);
    double score = -1.0;
    if (ok) {
      score = expected_mutual_information(
          belief, visible_cells(world, cand, d_max), sensor);
      if (score > best_score) {
        best_score = score;
        best = cand;
        best_index = i;
      }
    }
    if (eval) {
      eval->candidates.push_back(cand);
      eval->scores.push_back(score);
      eval->valid.push_back(ok ? 1 : 0);
    }
  }
  if (eval) eval->chosen = best_index;
  return best;
}

// First-order kinematic pose used by the tree-search baseline.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;

  Vec2 position() const { return {x, y}; }
};

struct MotionPrimitive {
  double u_v = 0.0;
  double u_omega = 0.0;
};

struct MctsConfig {
  int n_tree = 100;
  int n_sim = 10;
  int depth = 4;
  double primitive_duration = 1.2;  // seconds
  double dt = 0.1;                  // pose sampling step along a primitive
  std::vector<double> speeds = {0.0, 1.0, 3.0};
  std::vector<double> turn_rates = {-M_PI / 4.0, -M_PI / 10.0, 0.0, M_PI / 10.0,
                                    M_PI / 4.0};
  double ucb_c = 2.0;

  std::vector<MotionPrimitive> primitives() const {
    std::vector<MotionPrimitive> out;
    out.reserve(speeds.size() * turn_rates.size());
    for (double v : speeds)
      for (double w : turn_rates) out.push_back({v, w});
    return out;
  }
};

// Integrates x' = v cos psi, y' = v sin psi, psi' = w for duration seconds,
// emitting a pose every dt (exact arc per step). Includes the start pose.
inline std::vector<Pose> primitive_rollout(const Pose& start,
                                           const MotionPrimitive& prim,
                                           double duration, double dt) {
  if (dt <= 0) throw std::invalid_argument("primitive_rollout: dt must be > 0");
  const int n_steps = std::max(1, static_cast<int>(std::llround(duration / dt)));
  std::vector<Pose> path;
  path.reserve(n_steps + 1);
  path.push_back(start);
  Pose p = start;
  for (int i = 0; i < n_steps; ++i) {
    if (std::abs(prim.u_omega) > 1e-12) {
      const double psi_next = p.psi + prim.u_omega * dt;
      const double radius = prim.u_v / prim.u_omega;
      p.x += radius * (std::sin(psi_next) - std::sin(p.psi));
      p.y -= radius * (std::cos(psi_next) - std::cos(p.psi));
      p.psi = wrap_angle(psi_next);
    } else {
      p.x += prim.u_v * std::cos(p.psi) * dt;
      p.y += prim.u_v * std::sin(p.psi) * dt;
    }
    path.push_back(p);
  }
  return path;
}

namespace detail {

// Per-search scoring state: cell MI computed once from the root belief, each
// rollout claims cells through a fresh seen-mask so revisits are worth ~0.
// This is the compressed form of updating a belief copy along the rollout.
class MiScorer {
 public:
  MiScorer(const BeliefMap& belief, const WorldMap& world,
           const SensorModel& sensor) {
    const double h_hit = cell_entropy(sensor.p_hit);
    const double h_false = cell_entropy(sensor.p_false);
    mi_.assign(belief.log_odds.size(), 0.0);
    seen_.assign(belief.log_odds.size(), 0);
    for (int r = 0; r < belief.rows; ++r)
      for (int c = 0; c < belief.cols; ++c) {
        if (world.cell_blocked({r, c})) continue;
        const double p = belief.probability({r, c});
        const double pz = p * sensor.p_hit + (1.0 - p) * sensor.p_false;
        mi_[belief.flat({r, c})] =
            std::max(0.0, cell_entropy(pz) - (p * h_hit + (1.0 - p) * h_false));
      }
  }

  void reset_mask() { std::fill(seen_.begin(), seen_.end(), 0); }

  // Claims the visible set and returns the MI of newly seen cells.
  double claim(const std::vector<std::size_t>& visible_flat) {
    double gained = 0.0;
    for (std::size_t i : visible_flat) {
      if (!seen_[i]) {
        seen_[i] = 1;
        gained += mi_[i];
      }
    }
    return gained;
  }

 private:
  std::vector<double> mi_;
  std::vector<std::uint8_t> seen_;
};

inline std::vector<std::size_t> visible_flat(const WorldMap& world,
                                             const Vec2& pos, double d_max) {
  std::vector<std::size_t> out;
  for (const auto& c : visible_cells(world, pos, d_max)) out.push_back(world.flat(c));
  return out;
}

struct MctsNode {
  Pose pose;
  int parent = -1;
  int incoming_primitive = -1;
  int depth = 0;
  int visits = 0;
  double value_sum = 0.0;
  std::vector<int> valid_prims;         // primitive indices usable from here
  std::vector<int> children;            // node ids, parallel to valid_prims
  std::vector<std::size_t> visible;     // cached visible set at this pose
};

// A primitive is usable when every sampled pose stays in bounds and outside
// all obstacles.
inline bool primitive_collision_free(const WorldMap& world, const Pose& from,
                                     const MotionPrimitive& prim,
                                     const MctsConfig& cfg) {
  const auto path = primitive_rollout(from, prim, cfg.primitive_duration, cfg.dt);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2 p = path[i].position();
    if (!world.in_bounds(p) || world.point_in_obstacle(p)) return false;
  }
  return true;
}

}  // namespace detail

// UCT search over motion primitives with a first-order kinematic model.
// Returns the end pose position of the root's best child.
inline Vec2 mcts_plan(const BeliefMap& belief, const WorldMap& world,
                      const RobotState& state, const SensorModel& sensor,
                      double d_max, const MctsConfig& cfg, Rng& rng) {
  const auto prims = cfg.primitives();
  detail::MiScorer scorer(belief, world, sensor);

  std::vector<detail::MctsNode> nodes;
  nodes.reserve(cfg.n_tree + 1);
  detail::MctsNode root;
  root.pose = {state.x, state.y, state.psi};
  root.visible = detail::visible_flat(world, root.pose.position(), d_max);
  for (std::size_t i = 0; i < prims.size(); ++i)
    if (detail::primitive_collision_free(world, root.pose, prims[i], cfg))
      root.valid_prims.push_back(static_cast<int>(i));
  if (root.valid_prims.empty())
    throw NoFeasiblePrimitive("mcts_plan: every root primitive collides");
  nodes.push_back(std::move(root));

  double value_scale = 1e-9;

  for (int iter = 0; iter < cfg.n_tree; ++iter) {
    // Selection: descend while fully expanded, then expand one child.
    int cur = 0;
    std::vector<int> path{0};
    while (true) {
      detail::MctsNode& node = nodes[cur];
      if (node.depth >= cfg.depth || node.valid_prims.empty()) break;
      if (node.children.size() < node.valid_prims.size()) {
        // Expand the first untried primitive (index order).
        const int prim_idx = node.valid_prims[node.children.size()];
        detail::MctsNode child;
        const auto prim_path = primitive_rollout(node.pose, prims[prim_idx],
                                                 cfg.primitive_duration, cfg.dt);
        child.pose = prim_path.back();
        child.parent = cur;
        child.incoming_primitive = prim_idx;
        child.depth = node.depth + 1;
        child.visible = detail::visible_flat(world, child.pose.position(), d_max);
        for (std::size_t i = 0; i < prims.size(); ++i)
          if (detail::primitive_collision_free(world, child.pose, prims[i], cfg))
            child.valid_prims.push_back(static_cast<int>(i));
        nodes.push_back(std::move(child));
        const int child_id = static_cast<int>(nodes.size()) - 1;
        nodes[cur].children.push_back(child_id);
        cur = child_id;
        path.push_back(cur);
        break;
      }
      // UCB1 over the children; values normalized by the best return seen.
      int best_child = -1;
      double best_ucb = -std::numeric_limits<double>::infinity();
      for (int child_id : node.children) {
        const detail::MctsNode& ch = nodes[child_id];
        double ucb;
        if (ch.visits == 0) {
          ucb = std::numeric_limits<double>::infinity();
        } else {
          const double mean = ch.value_sum / ch.visits / value_scale;
          ucb = mean + cfg.ucb_c *
                           std::sqrt(std::log(static_cast<double>(node.visits)) /
                                     ch.visits);
        }
        if (ucb > best_ucb) {
          best_ucb = ucb;
          best_child = child_id;
        }
      }
      cur = best_child;
      path.push_back(cur);
    }

    // Simulation: average return of n_sim random-primitive completions.
    const int leaf = cur;
    double return_sum = 0.0;
    for (int sim = 0; sim < cfg.n_sim; ++sim) {
      scorer.reset_mask();
      scorer.claim(nodes[0].visible);  // robot already observes from here
      double total = 0.0;
      for (std::size_t i = 1; i < path.size(); ++i)
        total += scorer.claim(nodes[path[i]].visible);
      Pose pose = nodes[leaf].pose;
      int depth = nodes[leaf].depth;
      while (depth < cfg.depth) {
        std::vector<int> valid;
        for (std::size_t i = 0; i < prims.size(); ++i)
          if (detail::primitive_collision_free(world, pose, prims[i], cfg))
            valid.push_back(static_cast<int>(i));
        if (valid.empty()) break;
        const int pick = valid[uniform_index(rng, valid.size())];
        pose = primitive_rollout(pose, prims[pick], cfg.primitive_duration,
                                 cfg.dt)
                   .back();
        total += scorer.claim(detail::visible_flat(world, pose.position(), d_max));
        ++depth;
      }
      return_sum += total;
    }
    const double value = return_sum / std::max(1, cfg.n_sim);
    value_scale = std::max(value_scale, std::abs(value));

    // Backpropagation.
    for (int id : path) {
      nodes[id].visits += 1;
      nodes[id].value_sum += value;
    }
  }

  // Best root child by mean value; ties resolved by expansion order.
  int best = -1;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (int child_id : nodes[0].children) {
    const detail::MctsNode& ch = nodes[child_id];
    if (ch.visits == 0) continue;
    const double mean = ch.value_sum / ch.visits;
    if (mean > best_mean) {
      best_mean = mean;
      best = child_id;
    }
  }
  if (best < 0)
    throw NoFeasiblePrimitive("mcts_plan: no evaluated root child");
  return nodes[best].pose.position();
}

// Behavior-cloning expert: greedy viewpoint fed through the trajectory
// optimizer; the action is the optimized terminal position relative to the
// robot, clipped to the action square.
inline ViewpointAction expert_viewpoint(const BeliefMap& belief,
                                        const WorldMap& world,
                                        const RobotState& state,
                                        const SensorModel& sensor, double d_max,
                                        const GreedyConfig& greedy_cfg,
                                        const MpcConfig& mpc_cfg, Rng& rng) {
  const Vec2 target = greedy_next_best_view(belief, world, state.position(),
                                            sensor, d_max, greedy_cfg, rng);
  auto constraints =
      closest_obstacle_constraints(world, state.position(), mpc_cfg.n_obs);
  const auto boundary = map_boundary_constraints(world);
  constraints.insert(constraints.end(), boundary.begin(), boundary.end());
  const MpcSolution sol = solve(state, target, constraints, std::nullopt, mpc_cfg);
  const Vec2 terminal = sol.states.back().position();
  return clip_action(terminal - state.position(), greedy_cfg.delta_max);
}

// Robot-centered, heading-aligned binary obstacle window. Out-of-bounds
// samples are marked occupied.
inline std::vector<std::uint8_t> extract_local_grid(const WorldMap& world,
                                                    const RobotState& state,
                                                    int m, double cell_size) {
  if (m < 1 || cell_size <= 0)
    throw std::invalid_argument("extract_local_grid: bad window parameters");
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(m) * m, 0);
  const double c = (m - 1) / 2.0;
  const double cp = std::cos(state.psi), sp = std::sin(state.psi);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double ox = (j - c) * cell_size;
      const double oy = (i - c) * cell_size;
      const Vec2 p{state.x + cp * ox - sp * oy, state.y + sp * ox + cp * oy};
      const bool occ = !world.in_bounds(p) || world.point_in_obstacle(p);
      grid[static_cast<std::size_t>(i) * m + j] = occ ? 1 : 0;
    }
  }
  return grid;
}

// RL-style observation tuple [H_t, X_t, O_t, x_t].
struct PolicyObservation {
  std::vector<double> entropy;         // world-shaped, bits
  std::vector<double> indicator;       // world-shaped one-hot at the robot cell
  std::vector<std::uint8_t> local_grid;  // m x m egocentric window
  int local_grid_size = 0;
  RobotState robot_state;
};

inline PolicyObservation build_policy_observation(const BeliefMap& belief,
                                                  const WorldMap& world,
                                                  const RobotState& state, int m,
                                                  double cell_size) {
  if (!world.in_bounds(state.position()) ||
      world.point_in_obstacle(state.position()))
    throw InvalidPosition("build_policy_observation: robot not in free space");
  PolicyObservation obs;
  obs.entropy = entropy_map(belief, world);
  obs.indicator.assign(belief.log_odds.size(), 0.0);
  obs.indicator[world.flat(world.point_to_cell(state.position()))] = 1.0;
  obs.local_grid = extract_local_grid(world, state, m, cell_size);
  obs.local_grid_size = m;
  obs.robot_state = state;
  return obs;
}

// Viewpoint recommendation interface. The simulator calls recommend every
// N_a timesteps; implementations own their RNG state. A learned policy can be
// attached by implementing this interface.
struct PlannerContext {
  const WorldMap& world;
  const BeliefMap& belief;
  RobotState state;
  SensorModel sensor;
  double d_max = 5.0;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  virtual Vec2 recommend(const PlannerContext& ctx) = 0;
};

class GreedyPlanner : public Planner {
 public:
  GreedyPlanner(const GreedyConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {}
  std::string name() const override { return "greedy"; }
  Vec2 recommend(const PlannerContext& ctx) override {
    return greedy_next_best_view(ctx.belief, ctx.world, ctx.state.position(),
                                 ctx.sensor, ctx.d_max, cfg_, rng_);
  }

 private:
  GreedyConfig cfg_;
  Rng rng_;
};

class MctsPlanner : public Planner {
 public:
  MctsPlanner(const MctsConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {}
  std::string name() const override { return "mcts"; }
  Vec2 recommend(const PlannerContext& ctx) override {
    try {
      return mcts_plan(ctx.belief, ctx.world, ctx.state, ctx.sensor, ctx.d_max,
                       cfg_, rng_);
    } catch (const NoFeasiblePrimitive&) {
      return ctx.state.position();
    }
  }

 private:
  MctsConfig cfg_;
  Rng rng_;
};

class ExpertPlanner : public Planner {
 public:
  ExpertPlanner(const GreedyConfig& greedy, const MpcConfig& mpc,
                std::uint64_t seed)
      : greedy_(greedy), mpc_(mpc), rng_(seed) {}
  std::string name() const override { return "expert"; }
  Vec2 recommend(const PlannerContext& ctx) override {
    const ViewpointAction a =
        expert_viewpoint(ctx.belief, ctx.world, ctx.state, ctx.sensor, ctx.d_max,
                         greedy_, mpc_, rng_);
    return ctx.state.position() + a.delta;
  }

 private:
  GreedyConfig greedy_;
  MpcConfig mpc_;
  Rng rng_;
};

}  // namespace infoplan
