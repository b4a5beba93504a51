#include "rekf/filter.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <sstream>

namespace rekf {

namespace {

// Upper bisection bracket stays this fraction of an eigenvalue reciprocal
// away from the singularity at theta = 1/lambda_max.
constexpr double kBracketMargin = 1e-9;
constexpr int kMaxBisectionIterations = 200;

void check_symmetric(const Matrix& M, const char* name) {
  if (M.rows() != M.cols()) {
    std::ostringstream os;
    os << name << " must be square, got " << M.rows() << "x" << M.cols();
    throw std::domain_error(os.str());
  }
  if (M.size() == 0) {
    throw std::domain_error(std::string(name) + " is empty");
  }
  const double scale = M.cwiseAbs().maxCoeff();
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1.0)) {
    throw std::domain_error(std::string(name) + " is not symmetric");
  }
}

Vector pd_eigenvalues(const Matrix& P, const char* name) {
  check_symmetric(P, name);
  Eigen::SelfAdjointEigenSolver<Matrix> es(P, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError(std::string("eigendecomposition of ") + name + " failed", P);
  }
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::domain_error(std::string(name) + " is not positive definite");
  }
  return es.eigenvalues();
}

// log(1 - x) + 1/(1 - x) - 1 for x in [0, 1), without the cancellation the
// literal form suffers for small x (the two non-constant terms agree to
// O(x)). Substituting r = x/(1 - x) turns it into r - log1p(r); for small r
// even that difference cancels, so below r = 1/2 we sum the alternating
// series sum_{k>=2} (-1)^k r^k / k directly. Relative accuracy is a few ulp
// across the whole domain, which the tolerance solve relies on for budgets
// as small as 1e-12.
double divergence_term(double x) {
  const double r = x / (1.0 - x);
  if (r < 0.5) {
    double signed_power = r * r;  // (-1)^k r^k, starting at k = 2
    double acc = signed_power / 2.0;
    for (int k = 3; k <= 80; ++k) {
      signed_power *= -r;
      const double term = signed_power / k;
      acc += term;
      if (std::abs(term) <= std::numeric_limits<double>::epsilon() * std::abs(acc)) {
        break;
      }
    }
    return acc;
  }
  return r - std::log1p(r);
}

double gamma_from_eigenvalues(const Vector& eigenvalues, double theta) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    acc += divergence_term(theta * eigenvalues[i]);
  }
  return 0.5 * acc;
}

ThetaSolution solve_theta_from_eigenvalues(const Vector& eigenvalues, double c) {
  const double lambda_max = eigenvalues.maxCoeff();
  const double hi_limit = (1.0 - kBracketMargin) / lambda_max;
  const double gamma_hi = gamma_from_eigenvalues(eigenvalues, hi_limit);
  const double tol = 1e-9 * std::max(c, 1e-12);
  if (!(gamma_hi >= c)) {
    std::ostringstream os;
    os << "tolerance c = " << c << " exceeds gamma at the bracket edge (" << gamma_hi
       << "); no admissible theta below 1/lambda_max = " << 1.0 / lambda_max;
    throw SolverError(os.str());
  }

  double lo = 0.0;  // gamma(0) = 0 < c
  double hi = hi_limit;
  for (int it = 1; it <= kMaxBisectionIterations; ++it) {
    const double theta = 0.5 * (lo + hi);
    const double g = gamma_from_eigenvalues(eigenvalues, theta);
    if (std::abs(g - c) <= tol) {
      return ThetaSolution{theta, g - c, it, hi_limit};
    }
    if (g < c) {
      lo = theta;
    } else {
      hi = theta;
    }
  }
  std::ostringstream os;
  os << "theta bisection did not reach residual " << tol << " within "
     << kMaxBisectionIterations << " iterations (c = " << c << ", lambda_max = " << lambda_max
     << ")";
  throw SolverError(os.str());
}

void check_dims(const GaussianBelief& belief, const NonlinearModel& model, const Vector& y,
                const Vector& u) {
  if (belief.mean.size() != model.state_dim) {
    throw std::domain_error("belief mean dimension does not match model state_dim");
  }
  if (belief.covariance.rows() != model.state_dim ||
      belief.covariance.cols() != model.state_dim) {
    throw std::domain_error("belief covariance dimension does not match model state_dim");
  }
  if (y.size() != model.output_dim) {
    throw std::domain_error("measurement dimension does not match model output_dim");
  }
  if (u.size() != model.input_dim) {
    throw std::domain_error("input dimension does not match model input_dim");
  }
}

Matrix symmetrized(Matrix M) {
  M = 0.5 * (M + M.transpose()).eval();
  return M;
}

}  // namespace

bool joint_noise_positive_definite(const NonlinearModel& model) {
  const Eigen::Index n = model.noise_to_state.rows();
  const Eigen::Index p = model.noise_to_output.rows();
  Matrix stacked(n + p, model.noise_to_state.cols());
  stacked.topRows(n) = model.noise_to_state;
  stacked.bottomRows(p) = model.noise_to_output;
  const Matrix joint = stacked * stacked.transpose();
  Eigen::LLT<Matrix> llt(joint);
  return llt.info() == Eigen::Success;
}

double gamma(const Matrix& P, double theta) {
  const Vector eigenvalues = pd_eigenvalues(P, "P");
  const double lambda_max = eigenvalues.maxCoeff();
  if (theta < 0.0) {
    throw std::domain_error("theta must be nonnegative");
  }
  if (theta * lambda_max >= 1.0) {
    std::ostringstream os;
    os << "theta = " << theta << " is outside [0, 1/lambda_max) with lambda_max = " << lambda_max;
    throw std::domain_error(os.str());
  }
  return gamma_from_eigenvalues(eigenvalues, theta);
}

double kl_gaussian_zero_mean(const Matrix& V, const Matrix& P) {
  check_symmetric(V, "V");
  check_symmetric(P, "P");
  if (V.rows() != P.rows()) {
    throw std::domain_error("V and P dimensions differ");
  }
  Eigen::LLT<Matrix> llt_p(P);
  if (llt_p.info() != Eigen::Success) {
    throw std::domain_error("P is not positive definite");
  }
  Eigen::LLT<Matrix> llt_v(V);
  if (llt_v.info() != Eigen::Success) {
    throw std::domain_error("V is not positive definite");
  }
  const Eigen::Index n = V.rows();
  const double trace_term = llt_p.solve(V).trace();
  // log det from the Cholesky factors: det = prod diag(L)^2.
  const double logdet_p = 2.0 * llt_p.matrixLLT().diagonal().array().log().sum();
  const double logdet_v = 2.0 * llt_v.matrixLLT().diagonal().array().log().sum();
  return 0.5 * (trace_term - static_cast<double>(n) - logdet_v + logdet_p);
}

ThetaSolution solve_theta(const Matrix& P, double c) {
  if (!(c > 0.0)) {
    throw std::domain_error("tolerance c must be positive");
  }
  const Vector eigenvalues = pd_eigenvalues(P, "P");
  return solve_theta_from_eigenvalues(eigenvalues, c);
}

std::pair<Matrix, ThetaSolution> robustify_detailed(const Matrix& P, double c) {
  if (!(c > 0.0)) {
    throw std::domain_error("tolerance c must be positive");
  }
  if (c < kToleranceFloor) {
    // Below the floor the inflation is indistinguishable from the identity;
    // return the input bitwise so a degenerate schedule reproduces the plain
    // EKF exactly.
    return {P, ThetaSolution{0.0, -c, 0, 0.0}};
  }
  check_symmetric(P, "P");
  Eigen::SelfAdjointEigenSolver<Matrix> es(P);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of P failed", P);
  }
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::domain_error("P is not positive definite");
  }
  const ThetaSolution sol = solve_theta_from_eigenvalues(es.eigenvalues(), c);
  // V = (P^{-1} - theta I)^{-1} shares P's eigenvectors; each eigenvalue maps
  // to l / (1 - theta l) >= l, so V - P is positive semidefinite by
  // construction.
  const Vector inflated =
      es.eigenvalues().array() / (1.0 - sol.theta * es.eigenvalues().array());
  Matrix V = es.eigenvectors() * inflated.asDiagonal() * es.eigenvectors().transpose();
  return {symmetrized(std::move(V)), sol};
}

MeasurementUpdate measurement_update(const GaussianBelief& belief, const NonlinearModel& model,
                                     const Vector& y, const Vector& u) {
  check_dims(belief, model, y, u);
  const Matrix C = model.measurement_jacobian(belief.mean, u);
  if (C.rows() != model.output_dim || C.cols() != model.state_dim) {
    throw std::domain_error("measurement_jacobian returned wrong dimensions");
  }
  const Matrix& V = belief.covariance;
  Matrix S = C * V * C.transpose() + model.noise_to_output * model.noise_to_output.transpose();
  S = symmetrized(std::move(S));
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("innovation covariance is not positive definite", S);
  }
  // L = V C^T S^{-1}, computed as the transpose of S^{-1} (C V).
  Matrix gain = llt.solve(C * V).transpose();
  Vector innovation = y - model.measurement(belief.mean, u);
  Vector filtered = belief.mean + gain * innovation;
  return MeasurementUpdate{std::move(filtered), std::move(gain), std::move(innovation), C,
                           std::move(S)};
}

TimeUpdate time_update(const Vector& filtered_mean, const Matrix& V, const NonlinearModel& model,
                       const Vector& u, const Matrix& output_jacobian,
                       const Matrix& innovation_covariance) {
  const Matrix A = model.transition_jacobian(filtered_mean, u);
  if (A.rows() != model.state_dim || A.cols() != model.state_dim) {
    throw std::domain_error("transition_jacobian returned wrong dimensions");
  }
  Eigen::LLT<Matrix> llt(innovation_covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("innovation covariance is not positive definite", innovation_covariance);
  }
  const Matrix cross = V * output_jacobian.transpose();  // V C^T
  const Matrix filtered_cov = V - cross * llt.solve(cross.transpose());
  Matrix predicted = A * filtered_cov * A.transpose() +
                     model.noise_to_state * model.noise_to_state.transpose();
  return TimeUpdate{model.transition(filtered_mean, u), symmetrized(std::move(predicted))};
}

StepOutput ekf_step(const GaussianBelief& belief, const NonlinearModel& model, const Vector& y,
                    const Vector& u) {
  MeasurementUpdate mu = measurement_update(belief, model, y, u);
  TimeUpdate tu = time_update(mu.filtered_mean, belief.covariance, model, u, mu.output_jacobian,
                              mu.innovation_covariance);
  StepOutput out;
  out.filtered_mean = std::move(mu.filtered_mean);
  out.gain = std::move(mu.gain);
  out.innovation = std::move(mu.innovation);
  out.nominal_predicted_cov = tu.predicted_cov;
  out.predicted = GaussianBelief{std::move(tu.predicted_mean), std::move(tu.predicted_cov)};
  out.theta = 0.0;
  return out;
}

StepOutput rekf_step(const GaussianBelief& belief, const NonlinearModel& model, const Vector& y,
                     const Vector& u, double c) {
  StepOutput out = ekf_step(belief, model, y, u);
  auto [inflated, sol] = robustify_detailed(out.nominal_predicted_cov, c);
  out.predicted.covariance = std::move(inflated);
  out.theta = sol.theta;
  return out;
}

}  // namespace rekf
