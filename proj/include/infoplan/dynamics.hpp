#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "infoplan/geometry.hpp"

namespace infoplan {

// Second-order unicycle state [x, y, psi, v, omega].
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double omega = 0.0;

  Vec2 position() const { return {x, y}; }
};

// Linear and angular acceleration input [u_a, u_alpha].
struct ControlInput {
  double u_a = 0.0;
  double u_alpha = 0.0;
};

struct Limits {
  double v_min = 0.0;
  double v_max = 3.0;
  double omega_max = M_PI / 2.0;
  double a_max = 2.0;
  double alpha_max = M_PI;
};

struct StateDerivative {
  double dx, dy, dpsi, dv, domega;
};

inline StateDerivative derivative(const RobotState& s, const ControlInput& u) {
  return {s.v * std::cos(s.psi), s.v * std::sin(s.psi), s.omega, u.u_a,
          u.u_alpha};
}

inline ControlInput clamp_input(const ControlInput& u, const Limits& lim) {
  return {std::clamp(u.u_a, -lim.a_max, lim.a_max),
          std::clamp(u.u_alpha, -lim.alpha_max, lim.alpha_max)};
}

namespace detail {

inline RobotState advance(const RobotState& s, const StateDerivative& d,
                          double h) {
  return {s.x + h * d.dx, s.y + h * d.dy, s.psi + h * d.dpsi, s.v + h * d.dv,
          s.omega + h * d.domega};
}

}  // namespace detail

// One RK4 step of the unicycle ODE, then projection onto the admissible
// state set: v and omega are clamped, psi wrapped.
inline RobotState step(const RobotState& s, const ControlInput& u, double dt,
                       const Limits& lim = {}) {
  const StateDerivative k1 = derivative(s, u);
  const StateDerivative k2 = derivative(detail::advance(s, k1, dt / 2), u);
  const StateDerivative k3 = derivative(detail::advance(s, k2, dt / 2), u);
  const StateDerivative k4 = derivative(detail::advance(s, k3, dt), u);
  RobotState n;
  n.x = s.x + dt / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
  n.y = s.y + dt / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy);
  n.psi = s.psi + dt / 6.0 * (k1.dpsi + 2 * k2.dpsi + 2 * k3.dpsi + k4.dpsi);
  n.v = s.v + dt / 6.0 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv);
  n.omega =
      s.omega + dt / 6.0 * (k1.domega + 2 * k2.domega + 2 * k3.domega + k4.domega);
  n.psi = wrap_angle(n.psi);
  n.v = std::clamp(n.v, lim.v_min, lim.v_max);
  n.omega = std::clamp(n.omega, -lim.omega_max, lim.omega_max);
  return n;
}

// 5x5 / 5x2 step Jacobians, for the adjoint sweep in the trajectory
// optimizer. Layout row-major; state order [x, y, psi, v, omega].
struct StepJacobians {
  std::array<double, 25> A;  // d next_state / d state
  std::array<double, 10> B;  // d next_state / d input
};

namespace detail {

// df/dx of the continuous model at state s; columns [x y psi v omega].
inline std::array<double, 25> dyn_jac_state(const RobotState& s) {
  std::array<double, 25> J{};
  const double cp = std::cos(s.psi), sp = std::sin(s.psi);
  J[0 * 5 + 2] = -s.v * sp;  // dxdot/dpsi
  J[0 * 5 + 3] = cp;         // dxdot/dv
  J[1 * 5 + 2] = s.v * cp;   // dydot/dpsi
  J[1 * 5 + 3] = sp;         // dydot/dv
  J[2 * 5 + 4] = 1.0;        // dpsidot/domega
  return J;
}

inline std::array<double, 25> mat_mul5(const std::array<double, 25>& a,
                                       const std::array<double, 25>& b) {
  std::array<double, 25> c{};
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 5; ++k) {
      const double aik = a[i * 5 + k];
      if (aik == 0.0) continue;
      for (int j = 0; j < 5; ++j) c[i * 5 + j] += aik * b[k * 5 + j];
    }
  return c;
}

inline std::array<double, 10> mat_mul5x2(const std::array<double, 25>& a,
                                         const std::array<double, 10>& b) {
  std::array<double, 10> c{};
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 5; ++k) {
      const double aik = a[i * 5 + k];
      if (aik == 0.0) continue;
      c[i * 2 + 0] += aik * b[k * 2 + 0];
      c[i * 2 + 1] += aik * b[k * 2 + 1];
    }
  return c;
}

}  // namespace detail

// step() together with its exact Jacobians, including the projection: rows of
// saturated v/omega are zeroed (the clamp is locally constant there).
inline RobotState step_with_jacobians(const RobotState& s, const ControlInput& u,
                                      double dt, const Limits& lim,
                                      StepJacobians& jac) {
  using detail::advance;
  using detail::dyn_jac_state;
  using detail::mat_mul5;
  using detail::mat_mul5x2;

  std::array<double, 25> I{};
  for (int i = 0; i < 5; ++i) I[i * 5 + i] = 1.0;
  std::array<double, 10> Ku{};  // df/du, constant
  Ku[3 * 2 + 0] = 1.0;          // dvdot/du_a
  Ku[4 * 2 + 1] = 1.0;          // domegadot/du_alpha

  const StateDerivative k1 = derivative(s, u);
  const RobotState s2 = advance(s, k1, dt / 2);
  const StateDerivative k2 = derivative(s2, u);
  const RobotState s3 = advance(s, k2, dt / 2);
  const StateDerivative k3 = derivative(s3, u);
  const RobotState s4 = advance(s, k3, dt);
  const StateDerivative k4 = derivative(s4, u);

  // Stage sensitivities: dki/dx and dki/du.
  const auto J1 = dyn_jac_state(s);
  const auto dk1x = J1;
  const auto dk1u = Ku;

  auto stage = [&](const RobotState& sp, const std::array<double, 25>& dkx_prev,
                   const std::array<double, 10>& dku_prev, double h,
                   std::array<double, 25>& dkx, std::array<double, 10>& dku) {
    const auto J = dyn_jac_state(sp);
    std::array<double, 25> inner = I;
    for (int i = 0; i < 25; ++i) inner[i] += h * dkx_prev[i];
    dkx = mat_mul5(J, inner);
    std::array<double, 10> inner_u{};
    for (int i = 0; i < 10; ++i) inner_u[i] = h * dku_prev[i];
    dku = mat_mul5x2(J, inner_u);
    for (int i = 0; i < 10; ++i) dku[i] += Ku[i];
  };

  std::array<double, 25> dk2x, dk3x, dk4x;
  std::array<double, 10> dk2u, dk3u, dk4u;
  stage(s2, dk1x, dk1u, dt / 2, dk2x, dk2u);
  stage(s3, dk2x, dk2u, dt / 2, dk3x, dk3u);
  stage(s4, dk3x, dk3u, dt, dk4x, dk4u);

  for (int i = 0; i < 25; ++i)
    jac.A[i] = I[i] + dt / 6.0 * (dk1x[i] + 2 * dk2x[i] + 2 * dk3x[i] + dk4x[i]);
  for (int i = 0; i < 10; ++i)
    jac.B[i] = dt / 6.0 * (dk1u[i] + 2 * dk2u[i] + 2 * dk3u[i] + dk4u[i]);

  RobotState n;
  n.x = s.x + dt / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
  n.y = s.y + dt / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy);
  n.psi = wrap_angle(
      s.psi + dt / 6.0 * (k1.dpsi + 2 * k2.dpsi + 2 * k3.dpsi + k4.dpsi));
  n.v = s.v + dt / 6.0 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv);
  n.omega =
      s.omega + dt / 6.0 * (k1.domega + 2 * k2.domega + 2 * k3.domega + k4.domega);

  if (n.v <= lim.v_min || n.v >= lim.v_max) {
    n.v = std::clamp(n.v, lim.v_min, lim.v_max);
    for (int j = 0; j < 5; ++j) jac.A[3 * 5 + j] = 0.0;
    jac.B[3 * 2 + 0] = jac.B[3 * 2 + 1] = 0.0;
  }
  if (n.omega <= -lim.omega_max || n.omega >= lim.omega_max) {
    n.omega = std::clamp(n.omega, -lim.omega_max, lim.omega_max);
    for (int j = 0; j < 5; ++j) jac.A[4 * 5 + j] = 0.0;
    jac.B[4 * 2 + 0] = jac.B[4 * 2 + 1] = 0.0;
  }
  return n;
}

}  // namespace infoplan
