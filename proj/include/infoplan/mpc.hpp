#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "infoplan/dynamics.hpp"
#include "infoplan/world.hpp"

namespace infoplan {

struct InvalidConstraint : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SolverConfig {
  int max_outer = 10;
  int max_inner = 80;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e6;
  double constraint_tol = 1e-3;  // meters
  double grad_tol = 1e-6;
  double fd_step = 1e-6;  // used by finite-difference cross-checks
};

struct MpcConfig {
  int horizon = 15;
  double dt = 0.1;
  double q_terminal = 5.0;
  double q_accel = 0.003;
  double q_alpha = 0.003;
  int n_obs = 4;
  double robot_radius = 0.5;
  Limits limits;
  SolverConfig solver;
};

enum class MpcStatus { Converged, MaxIterations, Infeasible };

struct MpcSolution {
  std::vector<ControlInput> inputs;  // length N
  std::vector<RobotState> states;    // length N+1, states[0] = x0
  double cost = 0.0;
  double max_constraint_violation = 0.0;
  MpcStatus status = MpcStatus::MaxIterations;
};

struct MpcTraceEntry {
  int outer = 0;
  int inner = 0;
  double cost = 0.0;
  double violation = 0.0;
};

inline double stage_cost(const ControlInput& u, const MpcConfig& cfg) {
  return cfg.q_accel * u.u_a * u.u_a + cfg.q_alpha * u.u_alpha * u.u_alpha;
}

// Terminal viewpoint-tracking cost: squared distance to the reference,
// normalized by the squared distance at solve time so the weight is scale
// free. eps_den guards the already-at-reference case.
inline double terminal_cost(const Vec2& p_terminal, const Vec2& p_ref,
                            const Vec2& p_now, double q_terminal,
                            double eps_den = 1e-4) {
  const double denom = std::max((p_now - p_ref).norm_sq(), eps_den);
  return q_terminal * (p_terminal - p_ref).norm_sq() / denom;
}

inline std::vector<RobotState> rollout(const RobotState& x0,
                                       const std::vector<ControlInput>& inputs,
                                       double dt, const Limits& lim = {}) {
  std::vector<RobotState> states;
  states.reserve(inputs.size() + 1);
  states.push_back(x0);
  for (const auto& u : inputs) states.push_back(step(states.back(), u, dt, lim));
  return states;
}

inline std::pair<double, double> evaluate_objective_and_violation(
    const std::vector<ControlInput>& inputs, const RobotState& x0,
    const Vec2& p_ref, const std::vector<LinearConstraint>& constraints,
    const MpcConfig& cfg) {
  const auto states = rollout(x0, inputs, cfg.dt, cfg.limits);
  double cost = 0.0;
  for (const auto& u : inputs) cost += stage_cost(u, cfg);
  cost += terminal_cost(states.back().position(), p_ref, x0.position(),
                        cfg.q_terminal);
  double viol = 0.0;
  for (std::size_t k = 1; k < states.size(); ++k) {
    const Vec2 p = states[k].position();
    for (const auto& c : constraints)
      viol = std::max(viol, c.normal.dot(p) - (c.offset - cfg.robot_radius));
  }
  return {cost, viol};
}

namespace detail {

// Single-shooting workspace over the flat input vector U (2N entries).
class ShootingProblem {
 public:
  ShootingProblem(const RobotState& x0, const Vec2& p_ref,
                  const std::vector<LinearConstraint>& constraints,
                  const MpcConfig& cfg)
      : x0_(x0), p_ref_(p_ref), constraints_(constraints), cfg_(cfg) {
    denom_ = std::max((x0.position() - p_ref).norm_sq(), 1e-4);
  }

  int n_vars() const { return 2 * cfg_.horizon; }
  int n_constraints() const {
    return cfg_.horizon * static_cast<int>(constraints_.size());
  }

  static std::vector<ControlInput> unpack(const std::vector<double>& u_flat) {
    std::vector<ControlInput> inputs(u_flat.size() / 2);
    for (std::size_t k = 0; k < inputs.size(); ++k)
      inputs[k] = {u_flat[2 * k], u_flat[2 * k + 1]};
    return inputs;
  }

  void project(std::vector<double>& u_flat) const {
    for (std::size_t k = 0; k + 1 < u_flat.size(); k += 2) {
      u_flat[k] = std::clamp(u_flat[k], -cfg_.limits.a_max, cfg_.limits.a_max);
      u_flat[k + 1] =
          std::clamp(u_flat[k + 1], -cfg_.limits.alpha_max, cfg_.limits.alpha_max);
    }
  }

  // Constraint value g = n.p_k - (offset - r) for stage k >= 1, row-major in
  // (stage, constraint).
  void constraint_values(const std::vector<RobotState>& states,
                         std::vector<double>& g) const {
    g.resize(n_constraints());
    std::size_t i = 0;
    for (int k = 1; k <= cfg_.horizon; ++k) {
      const Vec2 p = states[k].position();
      for (const auto& c : constraints_)
        g[i++] = c.normal.dot(p) - (c.offset - cfg_.robot_radius);
    }
  }

  // Augmented-Lagrangian merit for inequality constraints (PHR form).
  double merit(const std::vector<double>& u_flat, const std::vector<double>& lambda,
               double rho, std::vector<RobotState>* states_out = nullptr) const {
    const auto inputs = unpack(u_flat);
    const auto states = rollout(x0_, inputs, cfg_.dt, cfg_.limits);
    double value = 0.0;
    for (const auto& u : inputs) value += stage_cost(u, cfg_);
    value += terminal_cost_local(states.back().position());
    std::vector<double> g;
    constraint_values(states, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double t = std::max(0.0, lambda[i] + rho * g[i]);
      value += (t * t - lambda[i] * lambda[i]) / (2.0 * rho);
    }
    if (states_out) *states_out = states;
    return value;
  }

  // Analytic merit gradient via one adjoint sweep over the rollout.
  double merit_with_gradient(const std::vector<double>& u_flat,
                             const std::vector<double>& lambda, double rho,
                             std::vector<double>& grad) const {
    const int N = cfg_.horizon;
    const auto inputs = unpack(u_flat);
    std::vector<RobotState> states(N + 1);
    std::vector<StepJacobians> jacs(N);
    states[0] = x0_;
    for (int k = 0; k < N; ++k)
      states[k + 1] =
          step_with_jacobians(states[k], inputs[k], cfg_.dt, cfg_.limits, jacs[k]);

    double value = 0.0;
    for (const auto& u : inputs) value += stage_cost(u, cfg_);
    value += terminal_cost_local(states[N].position());

    // Cotangent of each stage position from the constraint penalty.
    const std::size_t m = constraints_.size();
    std::vector<Vec2> pos_cotangent(N + 1, Vec2{0.0, 0.0});
    for (int k = 1; k <= N; ++k) {
      const Vec2 p = states[k].position();
      for (std::size_t j = 0; j < m; ++j) {
        const auto& c = constraints_[j];
        const double g = c.normal.dot(p) - (c.offset - cfg_.robot_radius);
        const double t = std::max(0.0, lambda[(k - 1) * m + j] + rho * g);
        value += (t * t - lambda[(k - 1) * m + j] * lambda[(k - 1) * m + j]) /
                 (2.0 * rho);
        if (t > 0.0) pos_cotangent[k] += t * c.normal;
      }
    }
    // Terminal cost contribution.
    pos_cotangent[N] += (2.0 * cfg_.q_terminal / denom_) *
                        (states[N].position() - p_ref_);

    grad.assign(2 * N, 0.0);
    std::array<double, 5> lam{};  // cotangent on state k+1
    for (int k = N - 1; k >= 0; --k) {
      lam[0] += pos_cotangent[k + 1].x;
      lam[1] += pos_cotangent[k + 1].y;
      // grad u_k = B_k^T lam + stage-cost term
      grad[2 * k] = jacs[k].B[0 * 2 + 0] * lam[0] + jacs[k].B[1 * 2 + 0] * lam[1] +
                    jacs[k].B[2 * 2 + 0] * lam[2] + jacs[k].B[3 * 2 + 0] * lam[3] +
                    jacs[k].B[4 * 2 + 0] * lam[4] +
                    2.0 * cfg_.q_accel * inputs[k].u_a;
      grad[2 * k + 1] = jacs[k].B[0 * 2 + 1] * lam[0] +
                        jacs[k].B[1 * 2 + 1] * lam[1] +
                        jacs[k].B[2 * 2 + 1] * lam[2] +
                        jacs[k].B[3 * 2 + 1] * lam[3] +
                        jacs[k].B[4 * 2 + 1] * lam[4] +
                        2.0 * cfg_.q_alpha * inputs[k].u_alpha;
      // lam = A_k^T lam
      std::array<double, 5> prev{};
      for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) prev[j] += jacs[k].A[i * 5 + j] * lam[i];
      lam = prev;
    }
    return value;
  }

  double terminal_cost_local(const Vec2& p_terminal) const {
    return cfg_.q_terminal * (p_terminal - p_ref_).norm_sq() / denom_;
  }

 private:
  RobotState x0_;
  Vec2 p_ref_;
  std::vector<LinearConstraint> constraints_;
  MpcConfig cfg_;
  double denom_ = 1.0;
};

}  // namespace detail

// Solves the viewpoint-tracking trajectory optimization: quadratic input
// stage costs plus the normalized terminal cost, subject to box input bounds
// (projection), clamped dynamics, and the linearized obstacle constraints at
// every predicted position. Returns the best iterate found; never throws on
// non-convergence.
inline MpcSolution solve(const RobotState& x0, const Vec2& p_ref,
                         const std::vector<LinearConstraint>& constraints,
                         const std::optional<std::vector<ControlInput>>& warm_start,
                         const MpcConfig& cfg,
                         std::vector<MpcTraceEntry>* trace = nullptr) {
  for (const auto& c : constraints)
    if (std::abs(c.normal.norm() - 1.0) > 1e-9)
      throw InvalidConstraint("mpc::solve: constraint normal must be unit length");

  const int N = cfg.horizon;
  detail::ShootingProblem prob(x0, p_ref, constraints, cfg);
  const SolverConfig& sc = cfg.solver;

  // Initialization: zero inputs, or the warm start shifted by one step with a
  // zero pad; whichever has the lower initial merit.
  std::vector<double> u(2 * N, 0.0);
  std::vector<double> lambda(prob.n_constraints(), 0.0);
  double rho = sc.penalty_init;
  if (warm_start && !warm_start->empty()) {
    std::vector<double> shifted(2 * N, 0.0);
    const auto& w = *warm_start;
    for (int k = 0; k + 1 < static_cast<int>(w.size()) && k + 1 < N + 1; ++k) {
      shifted[2 * k] = w[k + 1].u_a;
      shifted[2 * k + 1] = w[k + 1].u_alpha;
    }
    prob.project(shifted);
    if (prob.merit(shifted, lambda, rho) < prob.merit(u, lambda, rho))
      u = shifted;
  }

  auto evaluate = [&](const std::vector<double>& uf) {
    return evaluate_objective_and_violation(detail::ShootingProblem::unpack(uf),
                                            x0, p_ref, constraints, cfg);
  };

  std::vector<double> best_u = u;
  auto [best_cost, best_viol] = evaluate(u);
  auto consider = [&](const std::vector<double>& uf, double cost, double viol) {
    const bool cand_feas = viol <= sc.constraint_tol;
    const bool best_feas = best_viol <= sc.constraint_tol;
    bool better = false;
    if (cand_feas && best_feas)
      better = cost < best_cost;
    else if (cand_feas != best_feas)
      better = cand_feas;
    else
      better = viol < best_viol || (viol == best_viol && cost < best_cost);
    if (better) {
      best_u = uf;
      best_cost = cost;
      best_viol = viol;
    }
  };

  bool converged = false;
  double prev_viol = std::numeric_limits<double>::infinity();
  std::vector<double> grad;
  for (int outer = 0; outer < sc.max_outer && !converged; ++outer) {
    // Inner: projected gradient with Barzilai-Borwein steps and an Armijo
    // backtracking line search on the merit.
    double alpha = 1.0;
    double merit_val = prob.merit_with_gradient(u, lambda, rho, grad);
    bool inner_converged = false;
    std::vector<double> grad_prev, u_prev;
    for (int inner = 0; inner < sc.max_inner; ++inner) {
      // Projected-gradient stationarity measure.
      std::vector<double> probe = u;
      for (int i = 0; i < 2 * N; ++i) probe[i] -= grad[i];
      prob.project(probe);
      double pg_norm = 0.0;
      for (int i = 0; i < 2 * N; ++i)
        pg_norm = std::max(pg_norm, std::abs(probe[i] - u[i]));
      if (trace) {
        const auto [tc, tv] = evaluate(u);
        trace->push_back({outer, inner, tc, tv});
      }
      if (pg_norm <= sc.grad_tol) {
        inner_converged = true;
        break;
      }

      if (!u_prev.empty()) {
        double sy = 0.0, ss = 0.0;
        for (int i = 0; i < 2 * N; ++i) {
          const double s = u[i] - u_prev[i];
          const double y = grad[i] - grad_prev[i];
          sy += s * y;
          ss += s * s;
        }
        alpha = (sy > 1e-14) ? std::clamp(ss / sy, 1e-6, 1e3) : 1.0;
      }

      u_prev = u;
      grad_prev = grad;
      bool accepted = false;
      for (int bt = 0; bt < 30; ++bt) {
        std::vector<double> cand = u;
        for (int i = 0; i < 2 * N; ++i) cand[i] -= alpha * grad[i];
        prob.project(cand);
        double dist_sq = 0.0;
        for (int i = 0; i < 2 * N; ++i) {
          const double d = cand[i] - u[i];
          dist_sq += d * d;
        }
        if (dist_sq == 0.0) break;
        const double cand_merit = prob.merit(cand, lambda, rho);
        if (cand_merit <= merit_val - 1e-4 / alpha * dist_sq) {
          u = cand;
          merit_val = prob.merit_with_gradient(u, lambda, rho, grad);
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        inner_converged = true;  // no descent step available
        break;
      }
    }

    const auto [cost, viol] = evaluate(u);
    consider(u, cost, viol);
    if (viol <= sc.constraint_tol && inner_converged) {
      converged = true;
      break;
    }

    // Multiplier update and penalty growth.
    const auto states = rollout(x0, detail::ShootingProblem::unpack(u), cfg.dt,
                                cfg.limits);
    std::vector<double> g;
    prob.constraint_values(states, g);
    for (std::size_t i = 0; i < g.size(); ++i)
      lambda[i] = std::max(0.0, lambda[i] + rho * g[i]);
    if (viol > 0.25 * prev_viol)
      rho = std::min(rho * sc.penalty_growth, sc.penalty_max);
    prev_viol = viol;
  }

  MpcSolution sol;
  sol.inputs = detail::ShootingProblem::unpack(best_u);
  sol.states = rollout(x0, sol.inputs, cfg.dt, cfg.limits);
  sol.cost = best_cost;
  sol.max_constraint_violation = best_viol;
  if (converged)
    sol.status = MpcStatus::Converged;
  else
    sol.status = best_viol <= sc.constraint_tol ? MpcStatus::MaxIterations
                                                : MpcStatus::Infeasible;
  return sol;
}

}  // namespace infoplan
