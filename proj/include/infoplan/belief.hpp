#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "infoplan/rng.hpp"
#include "infoplan/world.hpp"

namespace infoplan {

struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Binary detection channel: p_hit = P(z=1 | target), p_false = P(z=1 | empty).
// The default is the deterministic sensor.
struct SensorModel {
  double p_hit = 1.0;
  double p_false = 0.0;

  // Log-odds increment contributed by one reading (inverse sensor model).
  // May be +-inf for a deterministic sensor; the update clamps afterwards.
  double log_odds_increment(bool z) const {
    return z ? std::log(p_hit / p_false)
             : std::log((1.0 - p_hit) / (1.0 - p_false));
  }

  bool valid() const { return p_false >= 0.0 && p_false < p_hit && p_hit <= 1.0; }
};

inline double logistic(double l) { return 1.0 / (1.0 + std::exp(-l)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Binary entropy in bits, with 0 log 0 = 0.
inline double cell_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Sensor readings for one timestep. Cells are the visible set, sorted
// row-major; values are the binary detections.
struct Observation {
  std::vector<CellIndex> cells;
  std::vector<std::uint8_t> values;

  std::size_t size() const { return cells.size(); }
};

// Per-cell log-odds of target occupancy. Value type; same grid shape as the
// world it was initialized from.
struct BeliefMap {
  int rows = 0;
  int cols = 0;
  double l_clamp = 6.906754778648554;  // logit(0.999)
  std::vector<double> log_odds;

  std::size_t flat(CellIndex c) const {
    return static_cast<std::size_t>(c.row) * cols + c.col;
  }
  double probability(CellIndex c) const { return logistic(log_odds[flat(c)]); }
  bool same_shape(const BeliefMap& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

inline BeliefMap init_uniform(const WorldMap& map) {
  BeliefMap b;
  b.rows = map.rows();
  b.cols = map.cols();
  b.log_odds.assign(static_cast<std::size_t>(b.rows) * b.cols, 0.0);
  return b;
}

inline Observation simulate_observation(const GroundTruthTargets& targets,
                                        const std::vector<CellIndex>& visible,
                                        const SensorModel& sensor, Rng& rng) {
  Observation obs;
  obs.cells = visible;
  obs.values.reserve(visible.size());
  for (const auto& c : visible) {
    const double p = targets.at(c) ? sensor.p_hit : sensor.p_false;
    obs.values.push_back(bernoulli(rng, p) ? 1 : 0);
  }
  return obs;
}

inline void update_in_place(BeliefMap& belief, const Observation& obs,
                            const SensorModel& sensor) {
  const double inc1 = sensor.log_odds_increment(true);
  const double inc0 = sensor.log_odds_increment(false);
  for (std::size_t i = 0; i < obs.cells.size(); ++i) {
    double& l = belief.log_odds[belief.flat(obs.cells[i])];
    l = std::clamp(l + (obs.values[i] ? inc1 : inc0), -belief.l_clamp,
                   belief.l_clamp);
  }
}

inline BeliefMap update(const BeliefMap& belief, const Observation& obs,
                        const SensorModel& sensor) {
  BeliefMap out = belief;
  update_in_place(out, obs, sensor);
  return out;
}

// Per-cell entropy grid in bits; obstacle cells are reported as 0.
inline std::vector<double> entropy_map(const BeliefMap& belief,
                                       const WorldMap& map) {
  if (belief.rows != map.rows() || belief.cols != map.cols())
    throw ShapeMismatch("entropy_map: belief/world shapes differ");
  std::vector<double> h(belief.log_odds.size(), 0.0);
  for (int r = 0; r < belief.rows; ++r)
    for (int c = 0; c < belief.cols; ++c)
      if (!map.cell_blocked({r, c}))
        h[belief.flat({r, c})] = cell_entropy(belief.probability({r, c}));
  return h;
}

// Closed-form MI of a set of independent binary cells through the sensor
// channel: per cell, I = H(Z) - [p h(p_hit) + (1-p) h(p_false)].
inline double expected_mutual_information(const BeliefMap& belief,
                                          const std::vector<CellIndex>& visible,
                                          const SensorModel& sensor) {
  const double h_hit = cell_entropy(sensor.p_hit);
  const double h_false = cell_entropy(sensor.p_false);
  double total = 0.0;
  for (const auto& c : visible) {
    const double p = belief.probability(c);
    const double pz = p * sensor.p_hit + (1.0 - p) * sensor.p_false;
    const double mi = cell_entropy(pz) - (p * h_hit + (1.0 - p) * h_false);
    total += std::max(0.0, mi);
  }
  return total;
}

// Entropy reduction between two belief snapshots over the given cells. Can be
// negative per cell under contradicting noisy evidence; summed as-is.
inline double realized_info_gain(const BeliefMap& before,
                                 const BeliefMap& after,
                                 const std::vector<CellIndex>& free) {
  if (!before.same_shape(after))
    throw ShapeMismatch("realized_info_gain: belief shapes differ");
  double gain = 0.0;
  for (const auto& c : free)
    gain += cell_entropy(before.probability(c)) -
            cell_entropy(after.probability(c));
  return gain;
}

inline double free_space_entropy(const BeliefMap& belief,
                                 const std::vector<CellIndex>& free) {
  double h = 0.0;
  for (const auto& c : free) h += cell_entropy(belief.probability(c));
  return h;
}

// Coverage termination: remaining free-space entropy has dropped to
// (1 - beta) of the initial uniform entropy (1 bit per free cell). The
// boundary is inclusive; a small relative guard keeps exact-count
// constructions on the passing side.
inline bool coverage_reached(const BeliefMap& belief,
                             const std::vector<CellIndex>& free, double beta) {
  if (beta < 0.0 || beta >= 1.0)
    throw std::invalid_argument("coverage_reached: beta outside [0,1)");
  const double initial = static_cast<double>(free.size());
  const double remaining = free_space_entropy(belief, free);
  return remaining <= (1.0 - beta) * initial + 1e-9 * initial;
}

}  // namespace infoplan
