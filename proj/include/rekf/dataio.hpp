#pragma once

#include "rekf/simulation.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rekf::io {

/// File could not be opened/created.
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed CSV content; the message carries the file and line number.
class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Missing or invalid configuration value.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Time-stamped excitation (and optionally measurement) series. The time
/// column must be uniformly spaced; sample_time is recovered on read.
struct SignalData {
  double sample_time = 0.0;
  std::vector<double> t;
  std::vector<double> u;
  std::optional<std::vector<double>> y;
};

/// Reads a `t,u` or `t,u,y` CSV. Rejects wrong headers, ragged rows,
/// non-numeric cells and non-uniform spacing (1e-9 relative), reporting the
/// offending line number.
SignalData read_signal_csv(const std::string& path);

/// Writes with 17 significant digits so values re-parse bit-exactly.
void write_signal_csv(const std::string& path, const SignalData& data);

/// Per-sample filter output. err_beta/err_omega are filled only when the
/// true parameters are known (synthetic runs) and must then match t in
/// length.
struct EstimateTrace {
  std::vector<double> t;
  std::array<std::vector<double>, 4> state;     // filtered means x̂_{t|t}
  std::array<std::vector<double>, 4> variance;  // diag of predicted covariance
  std::vector<double> theta;
  std::vector<double> innovation;
  std::vector<double> err_beta;
  std::vector<double> err_omega;
};

/// Header `t,x1,x2,x3,x4,v11,v22,v33,v44,theta,innovation[,err_beta,err_omega]`,
/// one row per sample, 17 significant digits, newline-terminated.
void write_trace_csv(const std::string& path, const EstimateTrace& trace);

EstimateTrace read_trace_csv(const std::string& path);

/// Header `t,x1,x2,x3,x4`; one row per truth state (samples + 1 rows).
void write_truth_csv(const std::string& path, const sim::TruthTrajectory& truth);

/// Parameter-estimation quality summary. Convergence time is the earliest
/// instant after which the relative error stays below the threshold for the
/// rest of the run; absent if that never happens. RMSE is taken over the
/// final fifth of the horizon.
struct Metrics {
  double terminal_err_beta = 0.0;
  double terminal_err_omega = 0.0;
  std::optional<double> convergence_time_beta;
  std::optional<double> convergence_time_omega;
  std::optional<double> max_post_err_beta;
  std::optional<double> max_post_err_omega;
  double rmse_beta = 0.0;
  double rmse_omega = 0.0;
};

Metrics compute_metrics(const EstimateTrace& trace, double true_beta, double true_omega,
                        double threshold_beta, double threshold_omega);

enum class FilterKind { Ekf, Rekf };

FilterKind filter_kind_from_string(const std::string& s);

struct FilterSettings {
  FilterKind kind = FilterKind::Rekf;
  Eigen::Vector4d x0 = Eigen::Vector4d::Zero();
  Eigen::Vector4d v0_diag = Eigen::Vector4d::Ones();
  Eigen::Vector4d q_diag = Eigen::Vector4d::Ones();
  double r = 1.0;
  double c0 = 0.0;
  double decay = 0.0;
};

struct MetricsSettings {
  double threshold_beta = 0.02;
  double threshold_omega = 0.01;
};

struct OutputPaths {
  std::string signal;
  std::string truth;
  std::string trace;
};

/// Everything one experiment needs: plant constants, filter settings, and
/// (for synthetic runs) the data-generation block.
struct ExperimentConfig {
  std::string name;
  housner::Params model;
  FilterSettings filter;
  std::optional<sim::TruthSpec> truth;
  std::optional<sim::ExcitationSpec> excitation;
  MetricsSettings metrics;
  std::uint64_t seed = 0;
  OutputPaths paths;
};

/// Loads and validates a JSON experiment config. Unknown enum strings,
/// missing required keys and out-of-range values raise ConfigError naming
/// the key.
ExperimentConfig load_config(const std::string& path);

}  // namespace rekf::io
