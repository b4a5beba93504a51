#include "rekf/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace rekf::experiment {

namespace {

void check_sample_time(double lhs, double rhs, const char* what) {
  if (std::abs(lhs - rhs) > 1e-9 * std::max(std::abs(lhs), std::abs(rhs))) {
    std::ostringstream os;
    os << what << ": sample time " << lhs << " does not match configured " << rhs;
    throw RunError(os.str());
  }
}

std::string format_seconds(const std::optional<double>& v) {
  if (!v.has_value()) return "never";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f s", *v);
  return buf;
}

std::string format_err(const std::optional<double>& v) {
  if (!v.has_value()) return "n/a";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", *v);
  return buf;
}

}  // namespace

void run_simulate(const io::ExperimentConfig& cfg, const std::string& signal_path,
                  const std::string& truth_path) {
  if (!cfg.excitation.has_value()) {
    throw RunError("config has no 'excitation' block; cannot simulate");
  }
  if (!cfg.truth.has_value()) {
    throw RunError("config has no 'truth' block; cannot simulate");
  }
  const sim::ExcitationSignal excitation = sim::gen_excitation(*cfg.excitation, cfg.seed);
  check_sample_time(excitation.sample_time, cfg.model.sample_time, "excitation");
  const sim::TruthTrajectory truth = sim::simulate_truth(excitation, cfg.model, *cfg.truth);
  const std::vector<double> y =
      sim::synthesize_measurements(truth, excitation, cfg.model, *cfg.truth, cfg.seed + 1);

  io::SignalData signal;
  signal.sample_time = excitation.sample_time;
  signal.t.resize(excitation.samples.size());
  for (std::size_t i = 0; i < signal.t.size(); ++i) {
    signal.t[i] = static_cast<double>(i) * excitation.sample_time;
  }
  signal.u = excitation.samples;
  signal.y = y;
  io::write_signal_csv(signal_path, signal);
  io::write_truth_csv(truth_path, truth);
}

EstimateResult run_estimate(const io::ExperimentConfig& cfg, const io::SignalData& input) {
  return run_estimate(cfg, input, cfg.filter.kind);
}

EstimateResult run_estimate(const io::ExperimentConfig& cfg, const io::SignalData& input,
                            io::FilterKind kind) {
  if (!input.y.has_value()) {
    throw RunError("input signal has no measurement column 'y'");
  }
  if (kind == io::FilterKind::Rekf && !(cfg.filter.c0 > 0.0)) {
    throw RunError("robust filter requested but c0 is not positive");
  }
  check_sample_time(input.sample_time, cfg.model.sample_time, "input signal");

  const NonlinearModel model = housner::build_model(cfg.model, cfg.filter.q_diag, cfg.filter.r);
  const ToleranceSchedule schedule{cfg.filter.c0, cfg.filter.decay};

  GaussianBelief belief{cfg.filter.x0, cfg.filter.v0_diag.asDiagonal()};
  const std::size_t n = input.t.size();

  io::EstimateTrace trace;
  trace.t = input.t;
  for (auto& col : trace.state) col.resize(n);
  for (auto& col : trace.variance) col.resize(n);
  trace.theta.resize(n);
  trace.innovation.resize(n);

  Vector u(1);
  Vector y(1);
  for (std::size_t i = 0; i < n; ++i) {
    u[0] = input.u[i];
    y[0] = (*input.y)[i];
    StepOutput step;
    try {
      step = kind == io::FilterKind::Rekf
                 ? rekf_step(belief, model, y, u, schedule.at(static_cast<long>(i)))
                 : ekf_step(belief, model, y, u);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "filter failed at sample " << i << " (t = " << input.t[i] << "): " << e.what();
      throw RunError(os.str());
    }
    for (int s = 0; s < 4; ++s) {
      trace.state[static_cast<std::size_t>(s)][i] = step.filtered_mean[s];
      trace.variance[static_cast<std::size_t>(s)][i] = step.predicted.covariance(s, s);
    }
    trace.theta[i] = step.theta;
    trace.innovation[i] = step.innovation[0];
    belief = std::move(step.predicted);
  }

  EstimateResult result;
  if (cfg.truth.has_value()) {
    trace.err_beta.resize(n);
    trace.err_omega.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      trace.err_beta[i] = std::abs(trace.state[2][i] - cfg.truth->beta) / cfg.truth->beta;
      trace.err_omega[i] = std::abs(trace.state[3][i] - cfg.truth->omega) / cfg.truth->omega;
    }
    result.metrics = io::compute_metrics(trace, cfg.truth->beta, cfg.truth->omega,
                                         cfg.metrics.threshold_beta, cfg.metrics.threshold_omega);
  }
  result.trace = std::move(trace);
  return result;
}

CompareResult run_compare(const io::ExperimentConfig& cfg, const io::SignalData& input) {
  CompareResult result;
  result.ekf = run_estimate(cfg, input, io::FilterKind::Ekf);
  result.rekf = run_estimate(cfg, input, io::FilterKind::Rekf);
  return result;
}

std::string format_metrics(const io::Metrics& m) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "  terminal rel. error      beta %.3e   omega %.3e\n",
                m.terminal_err_beta, m.terminal_err_omega);
  os << buf;
  os << "  convergence time         beta " << format_seconds(m.convergence_time_beta)
     << "   omega " << format_seconds(m.convergence_time_omega) << "\n";
  os << "  max error after conv.    beta " << format_err(m.max_post_err_beta) << "   omega "
     << format_err(m.max_post_err_omega) << "\n";
  std::snprintf(buf, sizeof buf, "  final-fifth RMSE         beta %.3e   omega %.3e\n",
                m.rmse_beta, m.rmse_omega);
  os << buf;
  return os.str();
}

}  // namespace rekf::experiment
