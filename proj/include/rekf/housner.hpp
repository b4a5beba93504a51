#pragma once

#include "rekf/filter.hpp"

#include <Eigen/Dense>

namespace rekf::housner {

/// Fixed physical constants of the sloshing-column rig. The identified
/// quantities (mass ratio and sloshing frequency) live in the state instead.
struct Params {
  double total_mass = 171.520;  // m_t, kg
  double damping_ratio = 0.005; // xi
  double sample_time = 0.001;   // Ts, s
};

/// State layout used throughout: x = [ ḋ, d, β, ω ]
///   x1  velocity of the sloshing column
///   x2  displacement of the sloshing column
///   x3  participating mass ratio β (augmented parameter, drift 0)
///   x4  sloshing natural frequency ω [rad/s] (augmented parameter, drift 0)
enum StateIndex { kVelocity = 0, kDisplacement = 1, kMassRatio = 2, kFrequency = 3 };

/// Continuous-time drift of the augmented state under base acceleration u:
///   ẋ1 = -u - 2 ξ x4 x1 - x4² x2,  ẋ2 = x1,  ẋ3 = ẋ4 = 0.
Vector drift(const Vector& x, double u, const Params& p);

/// Base shear transmitted by the tank,
///   y = -(1 - x3) m_t u + m_t x3 x4 x2 + m_t x3 x4 ξ x1.
double measurement(const Vector& x, double u, const Params& p);

/// 4x4 Jacobian of drift w.r.t. x.
Matrix drift_jacobian(const Vector& x, double u, const Params& p);

/// 1x4 Jacobian of measurement w.r.t. x.
Matrix measurement_jacobian(const Vector& x, double u, const Params& p);

/// Classical fourth-order Runge-Kutta step of ẋ = f(x, u) with the input
/// held constant over the step.
template <class Drift>
Vector rk4_step(Drift&& f, const Vector& x, double u, double dt) {
  const Vector k1 = f(x, u);
  const Vector k2 = f(x + (0.5 * dt) * k1, u);
  const Vector k3 = f(x + (0.5 * dt) * k2, u);
  const Vector k4 = f(x + dt * k3, u);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One sample-time RK4 step of the Housner drift.
Vector discrete_step(const Vector& x, double u, const Params& p);

/// Jacobian of discrete_step by central differences, per-component step
/// h_i = 1e-6 max(1, |x_i|). The analytic drift Jacobian cannot be used
/// directly because the RK4 map composes four drift evaluations.
Matrix discrete_jacobian(const Vector& x, double u, const Params& p);

/// Assemble the joint state/parameter estimation model. Process noise
/// enters as B = [Q^{1/2} | 0] and measurement noise as D = [0 | R^{1/2}]
/// over a shared 5-dimensional standard normal, so B B^T = Q, D D^T = R and
/// the two are uncorrelated. Q entries must be nonnegative and R positive.
NonlinearModel build_model(const Params& p, const Eigen::Vector4d& process_variances,
                           double output_variance);

}  // namespace rekf::housner
