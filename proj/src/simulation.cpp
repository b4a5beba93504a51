#include "rekf/simulation.hpp"

#include "rekf/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace rekf::sim {

namespace {

long sample_count(const ExcitationSpec& spec) {
  if (!(spec.sample_time > 0.0)) {
    throw SimulationError("excitation sample_time must be positive");
  }
  if (!(spec.duration > 0.0)) {
    throw SimulationError("excitation duration must be positive");
  }
  return std::lround(spec.duration / spec.sample_time);
}

std::vector<double> moving_average(const std::vector<double>& in, long half_width) {
  const long n = static_cast<long>(in.size());
  std::vector<double> out(in.size());
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(0L, i - half_width);
    const long hi = std::min(n - 1, i + half_width);
    double acc = 0.0;
    for (long j = lo; j <= hi; ++j) acc += in[j];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace

ExcitationKind excitation_kind_from_string(const std::string& s) {
  if (s == "sine") return ExcitationKind::Sine;
  if (s == "chirp") return ExcitationKind::Chirp;
  if (s == "bandlimited_noise") return ExcitationKind::BandlimitedNoise;
  if (s == "from_file") return ExcitationKind::FromFile;
  throw io::ConfigError("unknown excitation kind '" + s + "'");
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "student_t") return NoiseKind::StudentT;
  throw io::ConfigError("unknown noise kind '" + s + "'");
}

MismatchKind mismatch_kind_from_string(const std::string& s) {
  if (s == "coarse_truth_integration") return MismatchKind::CoarseTruthIntegration;
  if (s == "wrong_R") return MismatchKind::WrongR;
  if (s == "heavy_tailed_noise") return MismatchKind::HeavyTailedNoise;
  throw io::ConfigError("unknown mismatch kind '" + s + "'");
}

TruthSpec mismatch_scenario(TruthSpec base, MismatchKind kind, double magnitude) {
  switch (kind) {
    case MismatchKind::CoarseTruthIntegration:
      base.substeps = static_cast<int>(std::max(1L, std::lround(magnitude)));
      break;
    case MismatchKind::WrongR:
      if (!(magnitude > 0.0)) {
        throw io::ConfigError("wrong_R magnitude must be positive");
      }
      base.noise_variance *= magnitude;
      break;
    case MismatchKind::HeavyTailedNoise:
      if (!(magnitude > 0.0)) {
        throw io::ConfigError("heavy_tailed_noise dof must be positive");
      }
      base.noise = NoiseKind::StudentT;
      base.student_dof = magnitude;
      break;
  }
  return base;
}

ExcitationSignal gen_excitation(const ExcitationSpec& spec, std::uint64_t seed) {
  ExcitationSignal out;
  if (spec.kind == ExcitationKind::FromFile) {
    const io::SignalData data = io::read_signal_csv(spec.path);
    out.sample_time = data.sample_time;
    out.samples = data.u;
    return out;
  }

  const long n = sample_count(spec);
  out.sample_time = spec.sample_time;
  out.samples.resize(static_cast<std::size_t>(n));

  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (spec.kind) {
    case ExcitationKind::Sine: {
      for (long i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * spec.sample_time;
        out.samples[static_cast<std::size_t>(i)] = spec.amplitude * std::sin(two_pi * spec.freq_hz * t);
      }
      break;
    }
    case ExcitationKind::Chirp: {
      // Linear sweep f0 -> f1 over the duration; instantaneous phase
      // 2 pi (f0 t + (f1 - f0) t^2 / (2 T)).
      for (long i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * spec.sample_time;
        const double phase =
            two_pi * (spec.f0_hz * t +
                      0.5 * (spec.f1_hz - spec.f0_hz) * t * t / spec.duration);
        out.samples[static_cast<std::size_t>(i)] = spec.amplitude * std::sin(phase);
      }
      break;
    }
    case ExcitationKind::BandlimitedNoise: {
      if (!(spec.cutoff_hz > 0.0)) {
        throw SimulationError("bandlimited noise needs a positive cutoff");
      }
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> white(static_cast<std::size_t>(n));
      for (auto& w : white) w = normal(rng);
      // Moving-average window sized so the first spectral null sits near the
      // cutoff: full width about 1 / (2 fc Ts) samples.
      const long width = std::max(1L, std::lround(1.0 / (2.0 * spec.cutoff_hz * spec.sample_time)));
      std::vector<double> smooth = moving_average(white, width / 2);
      double ms = 0.0;
      for (double v : smooth) ms += v * v;
      ms /= static_cast<double>(smooth.size());
      const double scale = ms > 0.0 ? spec.amplitude / std::sqrt(ms) : 0.0;
      for (std::size_t i = 0; i < smooth.size(); ++i) {
        out.samples[i] = scale * smooth[i];
      }
      break;
    }
    case ExcitationKind::FromFile:
      break;  // handled above
  }
  return out;
}

TruthTrajectory simulate_truth(const ExcitationSignal& excitation, const housner::Params& params,
                               const TruthSpec& truth) {
  if (truth.substeps < 1) {
    throw SimulationError("substeps must be at least 1");
  }
  if (excitation.samples.empty()) {
    throw SimulationError("excitation has no samples");
  }
  TruthTrajectory out;
  out.sample_time = excitation.sample_time;
  out.states.reserve(excitation.samples.size() + 1);

  Vector x(4);
  x << truth.velocity0, truth.displacement0, truth.beta, truth.omega;
  out.states.push_back(x);

  const double h = excitation.sample_time / static_cast<double>(truth.substeps);
  const auto f = [&params](const Vector& s, double v) { return housner::drift(s, v, params); };
  for (std::size_t i = 0; i < excitation.samples.size(); ++i) {
    const double u = excitation.samples[i];
    for (int k = 0; k < truth.substeps; ++k) {
      x = housner::rk4_step(f, x, u, h);
    }
    if (!x.allFinite()) {
      std::ostringstream os;
      os << "truth integration diverged at sample " << i;
      throw SimulationError(os.str());
    }
    out.states.push_back(x);
  }
  return out;
}

std::vector<double> synthesize_measurements(const TruthTrajectory& truth,
                                            const ExcitationSignal& excitation,
                                            const housner::Params& params, const TruthSpec& spec,
                                            std::uint64_t seed) {
  if (truth.states.size() != excitation.samples.size() + 1) {
    throw SimulationError("truth trajectory length does not match excitation");
  }
  std::vector<double> y(excitation.samples.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(spec.student_dof);
  // Student-t with dof > 2 has variance dof / (dof - 2); rescale so the
  // samples match the requested variance. At dof <= 2 the variance is
  // infinite, so the raw draws are used with the sqrt(R) scale.
  double scale = std::sqrt(spec.noise_variance);
  if (spec.noise == NoiseKind::StudentT && spec.student_dof > 2.0) {
    scale *= std::sqrt((spec.student_dof - 2.0) / spec.student_dof);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    // The shear at sample i uses the state entering the interval, matching
    // the filter's time indexing (y_t observed at x_t).
    const Vector x = truth.states[i];
    double noise = 0.0;
    if (spec.noise_variance > 0.0) {
      noise = scale * (spec.noise == NoiseKind::Gaussian ? normal(rng) : student(rng));
    }
    y[i] = housner::measurement(x, excitation.samples[i], params) + noise;
  }
  return y;
}

}  // namespace rekf::sim
