#pragma once

#include "rekf/housner.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rekf::sim {

/// Failure while generating data (diverging integration, malformed spec).
class SimulationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExcitationKind { Sine, Chirp, BandlimitedNoise, FromFile };

ExcitationKind excitation_kind_from_string(const std::string& s);

/// Description of a base-acceleration input. Which fields matter depends on
/// kind: sine uses amplitude/freq_hz, chirp uses amplitude/f0_hz/f1_hz,
/// bandlimited_noise uses amplitude (target RMS) and cutoff_hz, from_file
/// uses path.
struct ExcitationSpec {
  ExcitationKind kind = ExcitationKind::Sine;
  double duration = 1.0;     // s
  double sample_time = 1e-3; // s
  double amplitude = 1.0;    // peak for sine/chirp, RMS for bandlimited noise
  double freq_hz = 1.0;
  double f0_hz = 0.1;
  double f1_hz = 5.0;
  double cutoff_hz = 10.0;
  std::string path;
};

struct ExcitationSignal {
  double sample_time = 0.0;
  std::vector<double> samples;
};

/// Deterministic given (spec, seed). Band-limited noise is white Gaussian
/// smoothed by a centered moving average of width ~1/(2 fc Ts) and rescaled
/// to the requested RMS.
ExcitationSignal gen_excitation(const ExcitationSpec& spec, std::uint64_t seed);

/// Ground-truth generation settings: the physical parameter values, the
/// mechanical initial condition, how finely the truth ODE is integrated
/// relative to the filter's sample time, and the measurement-noise law.
enum class NoiseKind { Gaussian, StudentT };

NoiseKind noise_kind_from_string(const std::string& s);

struct TruthSpec {
  double beta = 0.612;
  double omega = 5.489;  // rad/s
  double velocity0 = 0.0;
  double displacement0 = 0.0;
  int substeps = 10;            // truth integrates at sample_time / substeps
  double noise_variance = 1.0;  // true R, not necessarily the filter's R
  NoiseKind noise = NoiseKind::Gaussian;
  double student_dof = 3.0;
};

enum class MismatchKind { CoarseTruthIntegration, WrongR, HeavyTailedNoise };

MismatchKind mismatch_kind_from_string(const std::string& s);

/// Derive a perturbed truth from a nominal one. coarse_truth_integration
/// sets substeps = round(magnitude); wrong_R scales noise_variance by
/// magnitude; heavy_tailed_noise switches to Student-t with dof = magnitude.
TruthSpec mismatch_scenario(TruthSpec base, MismatchKind kind, double magnitude);

struct TruthTrajectory {
  double sample_time = 0.0;
  std::vector<Eigen::Vector4d> states;  // length = samples + 1
};

/// Integrate the damped oscillator under the excitation with RK4 at
/// sample_time / substeps. The parameter components of the state stay
/// exactly constant (their drift is identically zero).
TruthTrajectory simulate_truth(const ExcitationSignal& excitation, const housner::Params& params,
                               const TruthSpec& truth);

/// Noisy base-shear measurements along the truth trajectory, one per
/// excitation sample. Student-t draws are scaled to match noise_variance
/// when dof > 2 (infinite-variance dof keeps the raw scale).
std::vector<double> synthesize_measurements(const TruthTrajectory& truth,
                                            const ExcitationSignal& excitation,
                                            const housner::Params& params, const TruthSpec& spec,
                                            std::uint64_t seed);

}  // namespace rekf::sim
