#include "rekf/housner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rekf::housner {

namespace {

void check_state(const Vector& x) {
  if (x.size() != 4) {
    std::ostringstream os;
    os << "Housner state must have 4 components, got " << x.size();
    throw std::domain_error(os.str());
  }
}

}  // namespace

Vector drift(const Vector& x, double u, const Params& p) {
  check_state(x);
  Vector dx(4);
  dx[kVelocity] = -u - 2.0 * p.damping_ratio * x[kFrequency] * x[kVelocity] -
                  x[kFrequency] * x[kFrequency] * x[kDisplacement];
  dx[kDisplacement] = x[kVelocity];
  dx[kMassRatio] = 0.0;
  dx[kFrequency] = 0.0;
  return dx;
}

double measurement(const Vector& x, double u, const Params& p) {
  check_state(x);
  const double m = p.total_mass;
  return -(1.0 - x[kMassRatio]) * m * u + m * x[kMassRatio] * x[kFrequency] * x[kDisplacement] +
         m * x[kMassRatio] * x[kFrequency] * p.damping_ratio * x[kVelocity];
}

Matrix drift_jacobian(const Vector& x, double u, const Params& p) {
  check_state(x);
  (void)u;  // the drift is affine in u, so u drops out of the state Jacobian
  Matrix jac = Matrix::Zero(4, 4);
  jac(kVelocity, kVelocity) = -2.0 * p.damping_ratio * x[kFrequency];
  jac(kVelocity, kDisplacement) = -x[kFrequency] * x[kFrequency];
  jac(kVelocity, kFrequency) =
      -2.0 * p.damping_ratio * x[kVelocity] - 2.0 * x[kFrequency] * x[kDisplacement];
  jac(kDisplacement, kVelocity) = 1.0;
  return jac;
}

Matrix measurement_jacobian(const Vector& x, double u, const Params& p) {
  check_state(x);
  const double m = p.total_mass;
  const double xi = p.damping_ratio;
  Matrix jac(1, 4);
  jac(0, kVelocity) = m * x[kMassRatio] * x[kFrequency] * xi;
  jac(0, kDisplacement) = m * x[kMassRatio] * x[kFrequency];
  jac(0, kMassRatio) =
      m * u + m * x[kFrequency] * x[kDisplacement] + m * x[kFrequency] * xi * x[kVelocity];
  jac(0, kFrequency) = m * x[kMassRatio] * x[kDisplacement] + m * x[kMassRatio] * xi * x[kVelocity];
  return jac;
}

Vector discrete_step(const Vector& x, double u, const Params& p) {
  return rk4_step([&p](const Vector& s, double v) { return drift(s, v, p); }, x, u,
                  p.sample_time);
}

Matrix discrete_jacobian(const Vector& x, double u, const Params& p) {
  check_state(x);
  Matrix jac(4, 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    Vector plus = x;
    Vector minus = x;
    plus[j] += h;
    minus[j] -= h;
    jac.col(j) = (discrete_step(plus, u, p) - discrete_step(minus, u, p)) / (2.0 * h);
  }
  return jac;
}

NonlinearModel build_model(const Params& p, const Eigen::Vector4d& process_variances,
                           double output_variance) {
  if ((process_variances.array() < 0.0).any()) {
    throw std::domain_error("process noise variances must be nonnegative");
  }
  if (!(output_variance > 0.0)) {
    throw std::domain_error("output noise variance must be positive");
  }
  NonlinearModel model;
  model.state_dim = 4;
  model.input_dim = 1;
  model.output_dim = 1;
  model.noise_dim = 5;
  model.transition = [p](const Vector& x, const Vector& u) { return discrete_step(x, u[0], p); };
  model.measurement = [p](const Vector& x, const Vector& u) {
    Vector y(1);
    y[0] = measurement(x, u[0], p);
    return y;
  };
  model.transition_jacobian = [p](const Vector& x, const Vector& u) {
    return discrete_jacobian(x, u[0], p);
  };
  model.measurement_jacobian = [p](const Vector& x, const Vector& u) {
    return measurement_jacobian(x, u[0], p);
  };
  model.noise_to_state = Matrix::Zero(4, 5);
  model.noise_to_state.leftCols<4>() =
      process_variances.array().sqrt().matrix().asDiagonal();
  model.noise_to_output = Matrix::Zero(1, 5);
  model.noise_to_output(0, 4) = std::sqrt(output_variance);
  return model;
}

}  // namespace rekf::housner
