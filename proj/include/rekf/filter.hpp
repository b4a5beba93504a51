#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace rekf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Matrix-level failure (factorization breakdown, loss of positive
/// definiteness at a numerical boundary). Carries the offending matrix.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, Matrix offending)
      : std::runtime_error(what), offending_(std::move(offending)) {}
  const Matrix& offending() const noexcept { return offending_; }

 private:
  Matrix offending_;
};

/// The scalar tolerance equation could not be solved to the requested
/// residual within the iteration cap.
class SolverError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Predicted state estimate x̂ together with its covariance V.
struct GaussianBelief {
  Vector mean;
  Matrix covariance;
};

/// Discrete-time nonlinear state-space model
///
///   x_{t+1} = f(x_t, u_t) + B v_t
///   y_t     = h(x_t, u_t) + D v_t
///
/// with v_t standard white Gaussian noise of dimension noise_dim. The
/// standing assumption is that [B; D][B^T D^T] is positive definite, which
/// holds whenever D D^T is invertible and the joint block is full rank.
struct NonlinearModel {
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  Eigen::Index output_dim = 0;
  Eigen::Index noise_dim = 0;
  std::function<Vector(const Vector&, const Vector&)> transition;
  std::function<Vector(const Vector&, const Vector&)> measurement;
  std::function<Matrix(const Vector&, const Vector&)> transition_jacobian;
  std::function<Matrix(const Vector&, const Vector&)> measurement_jacobian;
  Matrix noise_to_state;   // B, state_dim x noise_dim
  Matrix noise_to_output;  // D, output_dim x noise_dim
};

/// Cholesky check of the joint noise covariance [B; D][B^T D^T].
bool joint_noise_positive_definite(const NonlinearModel& model);

/// Exponentially decaying per-step mismodeling budget c_t = c0 e^{-decay t},
/// indexed by integer sample count.
struct ToleranceSchedule {
  double c0 = 0.0;
  double decay = 0.0;

  double at(long step) const { return c0 * std::exp(-decay * static_cast<double>(step)); }
};

/// Root of gamma(P, theta) = c along with solver diagnostics.
struct ThetaSolution {
  double theta = 0.0;
  double gamma_residual = 0.0;  // gamma(P, theta) - c at the returned theta
  int iterations = 0;
  double bracket_high = 0.0;  // (1 - eps) / lambda_max(P)
};

/// One filter step: filtered estimate at time t plus the prediction carried
/// into t+1. For the plain EKF theta is 0 and predicted.covariance equals
/// nominal_predicted_cov.
struct StepOutput {
  Vector filtered_mean;          // x̂_{t|t}
  GaussianBelief predicted;      // x̂_{t+1}, V_{t+1}
  Matrix gain;                   // L_t
  Vector innovation;             // y_t - h(x̂_t, u_t)
  Matrix nominal_predicted_cov;  // P_{t+1} before robustification
  double theta = 0.0;
};

/// Tolerances below this floor are treated as zero: the robustification
/// becomes the identity and the theta solve is skipped entirely.
inline constexpr double kToleranceFloor = 1e-12;

/// Divergence radius of the covariance-inflation map,
///
///   gamma(P, theta) = 1/2 { log det(I - theta P) + tr[(I - theta P)^{-1} - I] },
///
/// evaluated per eigenvalue of P as 1/2 sum_i [log(1 - theta l_i)
/// + (1 - theta l_i)^{-1} - 1]. Zero at theta = 0 and strictly increasing on
/// [0, 1/lambda_max(P)).
double gamma(const Matrix& P, double theta);

/// KL divergence between zero-mean Gaussians N(0, V) and N(0, P):
/// 1/2 [tr(P^{-1} V) - n - log det V + log det P].
double kl_gaussian_zero_mean(const Matrix& V, const Matrix& P);

/// Bisection solve of gamma(P, theta) = c on (0, (1 - 1e-9)/lambda_max(P)).
/// Terminates when |gamma - c| <= 1e-9 max(c, 1e-12); throws SolverError if
/// 200 iterations do not reach that residual or the bracket cannot contain
/// the root.
ThetaSolution solve_theta(const Matrix& P, double c);

/// Least-favorable covariance inflation V = (P^{-1} - theta I)^{-1} with
/// theta from solve_theta(P, c), plus the solution itself. For c below
/// kToleranceFloor the input is returned unchanged with theta = 0.
std::pair<Matrix, ThetaSolution> robustify_detailed(const Matrix& P, double c);

inline Matrix robustify(const Matrix& P, double c) { return robustify_detailed(P, c).first; }

struct MeasurementUpdate {
  Vector filtered_mean;          // x̂_{t|t}
  Matrix gain;                   // L_t
  Vector innovation;             // y_t - h(x̂_t, u_t)
  Matrix output_jacobian;        // C_t evaluated at the predicted mean
  Matrix innovation_covariance;  // C V C^T + D D^T
};

/// Gain L_t = V C^T (C V C^T + D D^T)^{-1} and filtered mean
/// x̂_{t|t} = x̂_t + L_t (y - h(x̂_t, u)). The innovation covariance is
/// inverted through a Cholesky solve, never explicitly.
MeasurementUpdate measurement_update(const GaussianBelief& belief, const NonlinearModel& model,
                                     const Vector& y, const Vector& u);

struct TimeUpdate {
  Vector predicted_mean;  // x̂_{t+1} = f(x̂_{t|t}, u)
  Matrix predicted_cov;   // nominal P_{t+1}
};

/// Riccati propagation P_{t+1} = A V A^T - A V C^T S^{-1} C V A^T + B B^T
/// with A evaluated at the filtered mean; result symmetrized.
TimeUpdate time_update(const Vector& filtered_mean, const Matrix& V, const NonlinearModel& model,
                       const Vector& u, const Matrix& output_jacobian,
                       const Matrix& innovation_covariance);

/// Standard extended Kalman filter step (measurement update then time
/// update); theta = 0 and no covariance inflation.
StepOutput ekf_step(const GaussianBelief& belief, const NonlinearModel& model, const Vector& y,
                    const Vector& u);

/// Robust step: ekf_step followed by inflation of the predicted covariance
/// to the least-favorable value within the KL ball of radius c.
StepOutput rekf_step(const GaussianBelief& belief, const NonlinearModel& model, const Vector& y,
                     const Vector& u, double c);

}  // namespace rekf
