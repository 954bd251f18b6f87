#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "infoplan/geometry.hpp"
#include "infoplan/rng.hpp"

namespace infoplan {

struct GenerationExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidPosition : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Environment generator settings. Sizes in meters.
struct GenConfig {
  double width_m = 20.0;
  double height_m = 20.0;
  double resolution_m = 0.5;
  double half_extent_min = 1.0;
  double half_extent_max = 4.0;
  int max_attempts = 1000;
};

// Ground-truth environment: bounds, grid discretization and the static
// rectangular obstacles. Immutable after construction.
class WorldMap {
 public:
  WorldMap(double width_m, double height_m, double resolution_m,
           std::vector<RectObstacle> obstacles = {})
      : width_m_(width_m),
        height_m_(height_m),
        resolution_m_(resolution_m),
        obstacles_(std::move(obstacles)) {
    if (width_m <= 0 || height_m <= 0 || resolution_m <= 0)
      throw std::invalid_argument("WorldMap: extents and resolution must be > 0");
    rows_ = static_cast<int>(std::ceil(height_m_ / resolution_m_));
    cols_ = static_cast<int>(std::ceil(width_m_ / resolution_m_));
    for (const auto& o : obstacles_) {
      if (o.half_extents.x <= 0 || o.half_extents.y <= 0)
        throw std::invalid_argument("WorldMap: obstacle half extents must be > 0");
      if (o.lo().x < -1e-9 || o.lo().y < -1e-9 || o.hi().x > width_m_ + 1e-9 ||
          o.hi().y > height_m_ + 1e-9)
        throw std::invalid_argument("WorldMap: obstacle outside map bounds");
    }
    blocked_.assign(static_cast<std::size_t>(rows_) * cols_, 0);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c)
        if (point_in_obstacle(cell_center({r, c}))) blocked_[flat({r, c})] = 1;
  }

  double width_m() const { return width_m_; }
  double height_m() const { return height_m_; }
  double resolution_m() const { return resolution_m_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int n_cells() const { return rows_ * cols_; }
  const std::vector<RectObstacle>& obstacles() const { return obstacles_; }

  std::size_t flat(CellIndex c) const {
    return static_cast<std::size_t>(c.row) * cols_ + c.col;
  }
  CellIndex unflat(std::size_t i) const {
    return {static_cast<int>(i) / cols_, static_cast<int>(i) % cols_};
  }

  bool in_bounds(const Vec2& p) const {
    return p.x >= 0.0 && p.x <= width_m_ && p.y >= 0.0 && p.y <= height_m_;
  }
  bool cell_in_bounds(CellIndex c) const {
    return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_;
  }

  Vec2 cell_center(CellIndex c) const {
    return {(c.col + 0.5) * resolution_m_, (c.row + 0.5) * resolution_m_};
  }

  CellIndex point_to_cell(const Vec2& p) const {
    int col = static_cast<int>(std::floor(p.x / resolution_m_));
    int row = static_cast<int>(std::floor(p.y / resolution_m_));
    return {std::clamp(row, 0, rows_ - 1), std::clamp(col, 0, cols_ - 1)};
  }

  bool point_in_obstacle(const Vec2& p, double margin = 0.0) const {
    for (const auto& o : obstacles_)
      if (o.contains(p, margin)) return true;
    return false;
  }

  bool cell_blocked(CellIndex c) const { return blocked_[flat(c)] != 0; }
  const std::vector<std::uint8_t>& blocked_mask() const { return blocked_; }

  // Distance from p to the nearest obstacle; +inf when there are none.
  double obstacle_clearance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : obstacles_) best = std::min(best, o.distance(p));
    return best;
  }

 private:
  double width_m_, height_m_, resolution_m_;
  std::vector<RectObstacle> obstacles_;
  int rows_ = 0, cols_ = 0;
  std::vector<std::uint8_t> blocked_;
};

// Bernoulli realization of the hidden target map over free cells.
struct GroundTruthTargets {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> occupied;  // full grid, obstacle cells always 0

  bool at(CellIndex c) const {
    return occupied[static_cast<std::size_t>(c.row) * cols + c.col] != 0;
  }
};

// Halfplane obstacle constraint: normal . p <= offset - radius keeps a disc
// of that radius clear of the obstacle. The normal is unit length and points
// from the query position toward the obstacle; offset = normal . closest_point.
struct LinearConstraint {
  Vec2 normal;
  double offset = 0.0;

  // Positive when p is on the free side: equals the distance from p to the
  // constraint line through the closest obstacle point.
  double clearance(const Vec2& p) const { return offset - normal.dot(p); }
};

inline std::vector<CellIndex> free_cells(const WorldMap& map) {
  std::vector<CellIndex> out;
  out.reserve(map.n_cells());
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c)
      if (!map.cell_blocked({r, c})) out.push_back({r, c});
  return out;
}

namespace detail {

// Free space must form a single 4-connected component, so any start cell
// reaches everything.
inline bool free_space_connected(const WorldMap& map) {
  const int rows = map.rows(), cols = map.cols();
  int n_free = 0;
  std::size_t first = SIZE_MAX;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (!map.cell_blocked({r, c})) {
        ++n_free;
        if (first == SIZE_MAX) first = map.flat({r, c});
      }
  if (n_free == 0) return false;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(rows) * cols, 0);
  std::vector<CellIndex> stack{map.unflat(first)};
  seen[first] = 1;
  int reached = 0;
  while (!stack.empty()) {
    CellIndex cur = stack.back();
    stack.pop_back();
    ++reached;
    const CellIndex nb[4] = {{cur.row - 1, cur.col},
                             {cur.row + 1, cur.col},
                             {cur.row, cur.col - 1},
                             {cur.row, cur.col + 1}};
    for (const auto& n : nb) {
      if (!map.cell_in_bounds(n) || map.cell_blocked(n)) continue;
      std::size_t i = map.flat(n);
      if (!seen[i]) {
        seen[i] = 1;
        stack.push_back(n);
      }
    }
  }
  return reached == n_free;
}

}  // namespace detail

// Rejection-samples obstacle layouts until the free space is fully connected.
// Deterministic for a fixed (seed, n_obstacles, config).
inline WorldMap generate_random_environment(std::uint64_t seed, int n_obstacles,
                                            const GenConfig& cfg = {}) {
  if (n_obstacles < 0)
    throw std::invalid_argument("generate_random_environment: n_obstacles < 0");
  if (cfg.half_extent_min <= 0 || cfg.half_extent_max < cfg.half_extent_min)
    throw std::invalid_argument("generate_random_environment: bad size range");
  Rng rng(seed);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    std::vector<RectObstacle> obs;
    obs.reserve(n_obstacles);
    bool fits = true;
    for (int i = 0; i < n_obstacles; ++i) {
      const double hx_max = std::min(cfg.half_extent_max, cfg.width_m / 2.0);
      const double hy_max = std::min(cfg.half_extent_max, cfg.height_m / 2.0);
      if (hx_max < cfg.half_extent_min || hy_max < cfg.half_extent_min) {
        fits = false;
        break;
      }
      RectObstacle o;
      o.half_extents = {uniform_range(rng, cfg.half_extent_min, hx_max),
                        uniform_range(rng, cfg.half_extent_min, hy_max)};
      o.center = {
          uniform_range(rng, o.half_extents.x, cfg.width_m - o.half_extents.x),
          uniform_range(rng, o.half_extents.y,
                        cfg.height_m - o.half_extents.y)};
      obs.push_back(o);
    }
    if (!fits) break;
    WorldMap map(cfg.width_m, cfg.height_m, cfg.resolution_m, std::move(obs));
    if (detail::free_space_connected(map)) return map;
  }
  throw GenerationExhausted(
      "generate_random_environment: no connected layout within attempt budget");
}

inline GroundTruthTargets sample_targets(const WorldMap& map,
                                         std::uint64_t seed, double density) {
  if (density < 0.0 || density > 1.0)
    throw std::invalid_argument("sample_targets: density outside [0,1]");
  Rng rng(seed);
  GroundTruthTargets t;
  t.rows = map.rows();
  t.cols = map.cols();
  t.occupied.assign(static_cast<std::size_t>(t.rows) * t.cols, 0);
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c)
      if (!map.cell_blocked({r, c}) && bernoulli(rng, density))
        t.occupied[map.flat({r, c})] = 1;
  return t;
}

// True iff the segment pq is not blocked by any obstacle interior.
inline bool line_of_sight(const Vec2& p, const Vec2& q, const WorldMap& map) {
  for (const auto& o : map.obstacles())
    if (segment_intersects_interior(p, q, o)) return false;
  return true;
}

// Free cells whose center lies within d_max of position and is visible from
// it. Sorted row-major.
inline std::vector<CellIndex> visible_cells(const WorldMap& map,
                                            const Vec2& position,
                                            double d_max) {
  if (!map.in_bounds(position))
    throw InvalidPosition("visible_cells: position out of bounds");
  if (map.point_in_obstacle(position))
    throw InvalidPosition("visible_cells: position inside an obstacle");
  std::vector<CellIndex> out;
  const double res = map.resolution_m();
  const int r0 = std::max(0, static_cast<int>(std::floor((position.y - d_max) / res)));
  const int r1 = std::min(map.rows() - 1,
                          static_cast<int>(std::floor((position.y + d_max) / res)));
  const int c0 = std::max(0, static_cast<int>(std::floor((position.x - d_max) / res)));
  const int c1 = std::min(map.cols() - 1,
                          static_cast<int>(std::floor((position.x + d_max) / res)));
  const double d2 = d_max * d_max;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const CellIndex idx{r, c};
      if (map.cell_blocked(idx)) continue;
      const Vec2 center = map.cell_center(idx);
      if ((center - position).norm_sq() > d2) continue;
      if (line_of_sight(position, center, map)) out.push_back(idx);
    }
  }
  return out;
}

// Halfplane constraints for the n_obs nearest obstacles, linearized at the
// closest boundary point to position.
inline std::vector<LinearConstraint> closest_obstacle_constraints(
    const WorldMap& map, const Vec2& position, int n_obs) {
  struct Entry {
    double dist;
    std::size_t idx;
  };
  std::vector<Entry> order;
  order.reserve(map.obstacles().size());
  for (std::size_t i = 0; i < map.obstacles().size(); ++i)
    order.push_back({map.obstacles()[i].distance(position), i});
  std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.idx < b.idx;
  });
  std::vector<LinearConstraint> out;
  const std::size_t count =
      std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(0, n_obs)));
  for (std::size_t k = 0; k < count; ++k) {
    const RectObstacle& o = map.obstacles()[order[k].idx];
    const Vec2 cp = o.closest_point(position);
    Vec2 n = cp - position;  // toward the obstacle
    const double len = n.norm();
    if (len > 1e-12) {
      n = n * (1.0 / len);
    } else {
      // On or inside the boundary: fall back to the nearest face normal.
      const Vec2 lo = o.lo(), hi = o.hi();
      const double gaps[4] = {position.x - lo.x, hi.x - position.x,
                              position.y - lo.y, hi.y - position.y};
      int face = 0;
      for (int f = 1; f < 4; ++f)
        if (gaps[f] < gaps[face]) face = f;
      const Vec2 normals[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      n = normals[face];
    }
    out.push_back({n, n.dot(cp)});
  }
  return out;
}

// Halfplanes keeping a disc of the caller's radius inside the map rectangle,
// in the same n.p <= offset - r form as obstacle constraints.
inline std::vector<LinearConstraint> map_boundary_constraints(
    const WorldMap& map) {
  return {{{-1.0, 0.0}, 0.0},
          {{1.0, 0.0}, map.width_m()},
          {{0.0, -1.0}, 0.0},
          {{0.0, 1.0}, map.height_m()}};
}

// Uniformly sampled free-cell center with the requested clearance from
// obstacles and map edges.
inline Vec2 sample_start_position(const WorldMap& map, double clearance,
                                  Rng& rng) {
  std::vector<Vec2> candidates;
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      if (map.cell_blocked({r, c})) continue;
      const Vec2 p = map.cell_center({r, c});
      if (p.x < clearance || p.y < clearance || p.x > map.width_m() - clearance ||
          p.y > map.height_m() - clearance)
        continue;
      if (map.obstacle_clearance(p) < clearance) continue;
      candidates.push_back(p);
    }
  }
  if (candidates.empty())
    throw GenerationExhausted("sample_start_position: no cell with clearance");
  return candidates[uniform_index(rng, candidates.size())];
}

}  // namespace infoplan
