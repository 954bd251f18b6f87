#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoplan/belief.hpp"
#include "infoplan/sim.hpp"
#include "infoplan/world.hpp"

namespace infoplan {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Map files: bounds, obstacles, target cells, plus generator provenance.

inline json map_to_json(const WorldMap& map, const GroundTruthTargets& targets,
                        const json& provenance = json::object()) {
  json j;
  j["width_m"] = map.width_m();
  j["height_m"] = map.height_m();
  j["resolution_m"] = map.resolution_m();
  j["obstacles"] = json::array();
  for (const auto& o : map.obstacles())
    j["obstacles"].push_back({{"cx", o.center.x},
                              {"cy", o.center.y},
                              {"hx", o.half_extents.x},
                              {"hy", o.half_extents.y}});
  j["targets"] = json::array();
  for (int r = 0; r < targets.rows; ++r)
    for (int c = 0; c < targets.cols; ++c)
      if (targets.at({r, c})) j["targets"].push_back({r, c});
  j["provenance"] = provenance;
  return j;
}

struct LoadedMap {
  WorldMap map;
  GroundTruthTargets targets;
  json provenance;
};

inline LoadedMap map_from_json(const json& j) {
  std::vector<RectObstacle> obstacles;
  for (const auto& o : j.at("obstacles"))
    obstacles.push_back({{o.at("cx").get<double>(), o.at("cy").get<double>()},
                         {o.at("hx").get<double>(), o.at("hy").get<double>()}});
  WorldMap map(j.at("width_m").get<double>(), j.at("height_m").get<double>(),
               j.at("resolution_m").get<double>(), std::move(obstacles));
  GroundTruthTargets targets;
  targets.rows = map.rows();
  targets.cols = map.cols();
  targets.occupied.assign(static_cast<std::size_t>(map.rows()) * map.cols(), 0);
  for (const auto& cell : j.at("targets")) {
    const CellIndex idx{cell.at(0).get<int>(), cell.at(1).get<int>()};
    if (!map.cell_in_bounds(idx))
      throw std::invalid_argument("map_from_json: target cell out of range");
    targets.occupied[map.flat(idx)] = 1;
  }
  return {std::move(map), std::move(targets),
          j.value("provenance", json::object())};
}

// ---------------------------------------------------------------------------
// Belief snapshots.

inline json belief_to_json(const BeliefMap& belief) {
  json j;
  j["rows"] = belief.rows;
  j["cols"] = belief.cols;
  j["p"] = json::array();
  for (int r = 0; r < belief.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < belief.cols; ++c) row.push_back(belief.probability({r, c}));
    j["p"].push_back(std::move(row));
  }
  return j;
}

// Portable graymap (P2), one shade per cell, white = P(occupied) = 1.
inline void belief_to_pgm(const BeliefMap& belief, std::ostream& os) {
  os << "P2\n" << belief.cols << " " << belief.rows << "\n255\n";
  for (int r = 0; r < belief.rows; ++r) {
    for (int c = 0; c < belief.cols; ++c) {
      const int g =
          static_cast<int>(std::lround(255.0 * belief.probability({r, c})));
      os << g << (c + 1 < belief.cols ? ' ' : '\n');
    }
  }
}

// ---------------------------------------------------------------------------
// Episode results and benchmark reports.

inline json step_record_to_json(const StepRecord& rec) {
  return {{"t", rec.t},
          {"x", rec.state.x},
          {"y", rec.state.y},
          {"psi", rec.state.psi},
          {"v", rec.state.v},
          {"omega", rec.state.omega},
          {"p_ref", {rec.p_ref.x, rec.p_ref.y}},
          {"info_gain_bits", rec.info_gain_bits},
          {"entropy_remaining_bits", rec.entropy_remaining_bits}};
}

inline StepRecord step_record_from_json(const json& j) {
  StepRecord rec;
  rec.t = j.at("t").get<int>();
  rec.state.x = j.at("x").get<double>();
  rec.state.y = j.at("y").get<double>();
  rec.state.psi = j.at("psi").get<double>();
  rec.state.v = j.at("v").get<double>();
  rec.state.omega = j.at("omega").get<double>();
  rec.p_ref = {j.at("p_ref").at(0).get<double>(), j.at("p_ref").at(1).get<double>()};
  rec.info_gain_bits = j.at("info_gain_bits").get<double>();
  rec.entropy_remaining_bits = j.at("entropy_remaining_bits").get<double>();
  return rec;
}

// Timing fields are real wall-clock measurements; exclude_timing drops them
// for reproducibility comparisons.
inline json episode_to_json(const EpisodeResult& e, bool with_log = true,
                            bool exclude_timing = false) {
  json j;
  j["cumulative_reward"] = e.cumulative_reward;
  j["n_steps"] = e.n_steps;
  j["completed"] = e.completed;
  j["failure"] = e.failure;
  j["completion_time_s"] = e.completion_time_s;
  j["policy_steps"] = e.policy_steps;
  j["planner_calls"] = e.planner_calls;
  j["total_info_gain_bits"] = e.total_info_gain_bits;
  j["initial_entropy_bits"] = e.initial_entropy_bits;
  j["final_entropy_bits"] = e.final_entropy_bits;
  if (!exclude_timing) {
    j["planner_runtime_total_s"] = e.planner_runtime_total_s;
    j["planner_runtime_mean_s"] = e.planner_runtime_mean_s();
  }
  if (with_log) {
    j["step_log"] = json::array();
    for (const auto& rec : e.step_log) j["step_log"].push_back(step_record_to_json(rec));
  }
  return j;
}

inline json report_to_json(const BenchmarkReport& report,
                           bool exclude_timing = false) {
  json j;
  j["world_seeds"] = report.world_seeds;
  j["cells"] = json::array();
  for (const auto& cell : report.cells) {
    json c;
    c["planner"] = cell.planner;
    c["n_obstacles"] = cell.n_obstacles;
    c["reward_mean"] = cell.reward_mean;
    c["reward_std"] = cell.reward_std;
    c["failure_pct"] = cell.failure_pct;
    c["completion_time_mean_s"] = cell.completion_time_mean_s;
    if (!exclude_timing) c["planner_runtime_mean_s"] = cell.planner_runtime_mean_s;
    c["episodes"] = json::array();
    for (const auto& e : cell.episodes)
      c["episodes"].push_back(
          episode_to_json(e, /*with_log=*/false, exclude_timing));
    j["cells"].push_back(std::move(c));
  }
  return j;
}

// One row per planner x obstacle count, columns following the paper's
// benchmark table.
inline void report_to_csv(const BenchmarkReport& report, std::ostream& os) {
  os << "planner,n_obstacles,avg_episode_reward_mean,avg_episode_reward_std,"
        "failure_pct,time_until_completion_s,avg_planner_runtime_s\n";
  for (const auto& cell : report.cells) {
    os << cell.planner << ',' << cell.n_obstacles << ',' << cell.reward_mean
       << ',' << cell.reward_std << ',' << cell.failure_pct << ','
       << cell.completion_time_mean_s << ',' << cell.planner_runtime_mean_s
       << '\n';
  }
}

inline json mpc_trace_to_json_lines(const std::vector<MpcTraceEntry>& trace) {
  json lines = json::array();
  for (const auto& e : trace)
    lines.push_back({{"outer", e.outer},
                     {"inner", e.inner},
                     {"cost", e.cost},
                     {"violation", e.violation}});
  return lines;
}

}  // namespace infoplan
