#pragma once

#include "rekf/dataio.hpp"

#include <optional>
#include <string>

namespace rekf::experiment {

/// Failure while executing an experiment (inconsistent inputs, filter
/// breakdown at a specific sample).
class RunError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EstimateResult {
  io::EstimateTrace trace;
  std::optional<io::Metrics> metrics;  // present when the config knows the truth
};

/// Generate the configured excitation, integrate the truth, synthesize
/// noisy measurements, and write the signal and truth CSV files. Fully
/// deterministic given the config and seed (the measurement-noise stream is
/// seeded with seed + 1 so it is independent of the excitation stream).
void run_simulate(const io::ExperimentConfig& cfg, const std::string& signal_path,
                  const std::string& truth_path);

/// Run the configured filter over a measured signal (y column required).
EstimateResult run_estimate(const io::ExperimentConfig& cfg, const io::SignalData& input);

/// Same, but with an explicit filter choice overriding the config.
EstimateResult run_estimate(const io::ExperimentConfig& cfg, const io::SignalData& input,
                            io::FilterKind kind);

struct CompareResult {
  EstimateResult ekf;
  EstimateResult rekf;
};

/// Run both filters over the same data.
CompareResult run_compare(const io::ExperimentConfig& cfg, const io::SignalData& input);

/// Human-readable metrics block for terminal output.
std::string format_metrics(const io::Metrics& m);

}  // namespace rekf::experiment
