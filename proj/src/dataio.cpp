#include "rekf/dataio.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rekf::io {

namespace {

using nlohmann::json;

constexpr char kSignalHeaderU[] = "t,u";
constexpr char kSignalHeaderUY[] = "t,u,y";
constexpr char kTraceHeader[] = "t,x1,x2,x3,x4,v11,v22,v33,v44,theta,innovation";
constexpr char kTraceHeaderErr[] =
    "t,x1,x2,x3,x4,v11,v22,v33,v44,theta,innovation,err_beta,err_omega";
constexpr char kTruthHeader[] = "t,x1,x2,x3,x4";

void append_g17(std::string& out, double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << path << " line " << line << ": " << what;
  throw ParseError(os.str());
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& field, const std::string& path, std::size_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end || field.empty()) {
    parse_fail(path, line, "cannot parse number '" + field + "'");
  }
  return value;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Reads all rows below a known header into column vectors, enforcing a
// fixed field count and numeric cells.
std::vector<std::vector<double>> read_rows(std::ifstream& in, const std::string& path,
                                           std::size_t columns) {
  std::vector<std::vector<double>> cols(columns);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) {
      continue;  // tolerate a trailing blank line
    }
    const auto fields = split_fields(line);
    if (fields.size() != columns) {
      std::ostringstream os;
      os << "expected " << columns << " fields, got " << fields.size();
      parse_fail(path, line_no, os.str());
    }
    for (std::size_t c = 0; c < columns; ++c) {
      cols[c].push_back(parse_double(fields[c], path, line_no));
    }
  }
  return cols;
}

double checked_sample_time(const std::vector<double>& t, const std::string& path) {
  if (t.size() < 2) {
    throw ParseError(path + ": need at least 2 rows to establish the sample time");
  }
  const double ts = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(ts > 0.0)) {
    throw ParseError(path + ": time column is not increasing");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double expected = t.front() + static_cast<double>(i) * ts;
    if (std::abs(t[i] - expected) > 1e-9 * std::max(1.0, std::abs(t[i]))) {
      std::ostringstream os;
      os << "non-uniform time spacing at line " << (i + 2) << " (t = " << t[i] << ", expected "
         << expected << ")";
      throw ParseError(path + ": " + os.str());
    }
  }
  return ts;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  return out;
}

// --- JSON helpers -----------------------------------------------------

const json& require_key(const json& j, const std::string& key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError("missing key '" + where + key + "'");
  }
  return *it;
}

double require_number(const json& j, const std::string& key, const std::string& where) {
  const json& v = require_key(j, key, where);
  if (!v.is_number()) {
    throw ConfigError("'" + where + key + "' must be a number");
  }
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) {
    throw ConfigError("'" + key + "' must be a number");
  }
  return it->get<double>();
}

std::string require_string(const json& j, const std::string& key, const std::string& where) {
  const json& v = require_key(j, key, where);
  if (!v.is_string()) {
    throw ConfigError("'" + where + key + "' must be a string");
  }
  return v.get<std::string>();
}

Eigen::Vector4d require_vec4(const json& j, const std::string& key, const std::string& where) {
  const json& v = require_key(j, key, where);
  if (!v.is_array() || v.size() != 4) {
    throw ConfigError("'" + where + key + "' must be an array of 4 numbers");
  }
  Eigen::Vector4d out;
  for (int i = 0; i < 4; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) {
      throw ConfigError("'" + where + key + "' must be an array of 4 numbers");
    }
    out[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

sim::ExcitationSpec parse_excitation(const json& j, double sample_time) {
  sim::ExcitationSpec spec;
  spec.kind = sim::excitation_kind_from_string(require_string(j, "kind", "excitation."));
  spec.sample_time = sample_time;
  if (spec.kind == sim::ExcitationKind::FromFile) {
    spec.path = require_string(j, "path", "excitation.");
    return spec;
  }
  spec.duration = require_number(j, "duration", "excitation.");
  if (!(spec.duration > 0.0)) {
    throw ConfigError("'excitation.duration' must be positive");
  }
  switch (spec.kind) {
    case sim::ExcitationKind::Sine:
      spec.amplitude = require_number(j, "amplitude", "excitation.");
      spec.freq_hz = require_number(j, "freq_hz", "excitation.");
      break;
    case sim::ExcitationKind::Chirp:
      spec.amplitude = require_number(j, "amplitude", "excitation.");
      spec.f0_hz = require_number(j, "f0_hz", "excitation.");
      spec.f1_hz = require_number(j, "f1_hz", "excitation.");
      break;
    case sim::ExcitationKind::BandlimitedNoise:
      spec.amplitude = require_number(j, "rms", "excitation.");
      spec.cutoff_hz = require_number(j, "cutoff_hz", "excitation.");
      break;
    case sim::ExcitationKind::FromFile:
      break;
  }
  return spec;
}

sim::TruthSpec parse_truth(const json& j, double default_noise_variance) {
  sim::TruthSpec spec;
  spec.beta = require_number(j, "beta", "truth.");
  spec.omega = require_number(j, "omega", "truth.");
  if (!(spec.beta > 0.0) || !(spec.omega > 0.0)) {
    throw ConfigError("'truth.beta' and 'truth.omega' must be positive");
  }
  spec.velocity0 = number_or(j, "velocity0", 0.0);
  spec.displacement0 = number_or(j, "displacement0", 0.0);
  spec.substeps = static_cast<int>(number_or(j, "substeps", 10.0));
  if (spec.substeps < 1) {
    throw ConfigError("'truth.substeps' must be at least 1");
  }
  spec.noise_variance = number_or(j, "noise_variance", default_noise_variance);
  if (spec.noise_variance < 0.0) {
    throw ConfigError("'truth.noise_variance' must be nonnegative");
  }
  if (j.contains("noise")) {
    spec.noise = sim::noise_kind_from_string(require_string(j, "noise", "truth."));
  }
  spec.student_dof = number_or(j, "student_dof", 3.0);
  return spec;
}

}  // namespace

FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "ekf") return FilterKind::Ekf;
  if (s == "rekf") return FilterKind::Rekf;
  throw ConfigError("unknown filter kind '" + s + "' (expected 'ekf' or 'rekf')");
}

SignalData read_signal_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw ParseError(path + ": empty file");
  }
  header = strip_cr(header);
  bool has_y = false;
  if (header == kSignalHeaderUY) {
    has_y = true;
  } else if (header != kSignalHeaderU) {
    parse_fail(path, 1, "expected header 't,u' or 't,u,y', got '" + header + "'");
  }
  auto cols = read_rows(in, path, has_y ? 3 : 2);
  SignalData data;
  data.t = std::move(cols[0]);
  data.u = std::move(cols[1]);
  if (has_y) data.y = std::move(cols[2]);
  data.sample_time = checked_sample_time(data.t, path);
  return data;
}

void write_signal_csv(const std::string& path, const SignalData& data) {
  if (data.u.size() != data.t.size() ||
      (data.y.has_value() && data.y->size() != data.t.size())) {
    throw std::domain_error("signal columns have mismatched lengths");
  }
  std::ofstream out = open_for_write(path);
  std::string buf;
  buf.reserve(data.t.size() * 48 + 8);
  buf += data.y.has_value() ? kSignalHeaderUY : kSignalHeaderU;
  buf += '\n';
  for (std::size_t i = 0; i < data.t.size(); ++i) {
    append_g17(buf, data.t[i]);
    buf += ',';
    append_g17(buf, data.u[i]);
    if (data.y.has_value()) {
      buf += ',';
      append_g17(buf, (*data.y)[i]);
    }
    buf += '\n';
  }
  out << buf;
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
}

void write_trace_csv(const std::string& path, const EstimateTrace& trace) {
  const std::size_t n = trace.t.size();
  const bool has_err = !trace.err_beta.empty();
  for (const auto& col : trace.state) {
    if (col.size() != n) throw std::domain_error("trace state columns have mismatched lengths");
  }
  for (const auto& col : trace.variance) {
    if (col.size() != n) throw std::domain_error("trace variance columns have mismatched lengths");
  }
  if (trace.theta.size() != n || trace.innovation.size() != n) {
    throw std::domain_error("trace columns have mismatched lengths");
  }
  if (has_err && (trace.err_beta.size() != n || trace.err_omega.size() != n)) {
    throw std::domain_error("trace error columns have mismatched lengths");
  }
  std::ofstream out = open_for_write(path);
  std::string buf;
  buf.reserve(n * 200 + 80);
  buf += has_err ? kTraceHeaderErr : kTraceHeader;
  buf += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    append_g17(buf, trace.t[i]);
    for (int s = 0; s < 4; ++s) {
      buf += ',';
      append_g17(buf, trace.state[static_cast<std::size_t>(s)][i]);
    }
    for (int s = 0; s < 4; ++s) {
      buf += ',';
      append_g17(buf, trace.variance[static_cast<std::size_t>(s)][i]);
    }
    buf += ',';
    append_g17(buf, trace.theta[i]);
    buf += ',';
    append_g17(buf, trace.innovation[i]);
    if (has_err) {
      buf += ',';
      append_g17(buf, trace.err_beta[i]);
      buf += ',';
      append_g17(buf, trace.err_omega[i]);
    }
    buf += '\n';
  }
  out << buf;
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
}

EstimateTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw ParseError(path + ": empty file");
  }
  header = strip_cr(header);
  bool has_err = false;
  if (header == kTraceHeaderErr) {
    has_err = true;
  } else if (header != kTraceHeader) {
    parse_fail(path, 1, "unrecognized trace header '" + header + "'");
  }
  auto cols = read_rows(in, path, has_err ? 13 : 11);
  EstimateTrace trace;
  trace.t = std::move(cols[0]);
  for (int s = 0; s < 4; ++s) {
    trace.state[static_cast<std::size_t>(s)] = std::move(cols[static_cast<std::size_t>(1 + s)]);
    trace.variance[static_cast<std::size_t>(s)] = std::move(cols[static_cast<std::size_t>(5 + s)]);
  }
  trace.theta = std::move(cols[9]);
  trace.innovation = std::move(cols[10]);
  if (has_err) {
    trace.err_beta = std::move(cols[11]);
    trace.err_omega = std::move(cols[12]);
  }
  return trace;
}

void write_truth_csv(const std::string& path, const sim::TruthTrajectory& truth) {
  std::ofstream out = open_for_write(path);
  std::string buf;
  buf.reserve(truth.states.size() * 100 + 16);
  buf += kTruthHeader;
  buf += '\n';
  for (std::size_t i = 0; i < truth.states.size(); ++i) {
    append_g17(buf, static_cast<double>(i) * truth.sample_time);
    for (int s = 0; s < 4; ++s) {
      buf += ',';
      append_g17(buf, truth.states[i][s]);
    }
    buf += '\n';
  }
  out << buf;
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
}

Metrics compute_metrics(const EstimateTrace& trace, double true_beta, double true_omega,
                        double threshold_beta, double threshold_omega) {
  const std::size_t n = trace.t.size();
  if (n == 0) {
    throw std::domain_error("cannot compute metrics on an empty trace");
  }
  if (true_beta == 0.0 || true_omega == 0.0) {
    throw std::domain_error("true parameter values must be nonzero");
  }
  if (!(threshold_beta > 0.0) || !(threshold_omega > 0.0)) {
    throw std::domain_error("thresholds must be positive");
  }

  std::vector<double> err_b(n);
  std::vector<double> err_w(n);
  for (std::size_t i = 0; i < n; ++i) {
    err_b[i] = std::abs(trace.state[2][i] - true_beta) / std::abs(true_beta);
    err_w[i] = std::abs(trace.state[3][i] - true_omega) / std::abs(true_omega);
  }

  // Earliest index from which the error stays below the threshold for the
  // rest of the run; n means "never".
  const auto settle_index = [n](const std::vector<double>& err, double threshold) {
    std::size_t idx = n;
    for (std::size_t i = n; i-- > 0;) {
      if (err[i] >= threshold) break;
      idx = i;
    }
    return idx;
  };

  Metrics m;
  m.terminal_err_beta = err_b.back();
  m.terminal_err_omega = err_w.back();

  const std::size_t ib = settle_index(err_b, threshold_beta);
  if (ib < n) {
    m.convergence_time_beta = trace.t[ib];
    m.max_post_err_beta = *std::max_element(err_b.begin() + static_cast<std::ptrdiff_t>(ib),
                                            err_b.end());
  }
  const std::size_t iw = settle_index(err_w, threshold_omega);
  if (iw < n) {
    m.convergence_time_omega = trace.t[iw];
    m.max_post_err_omega = *std::max_element(err_w.begin() + static_cast<std::ptrdiff_t>(iw),
                                             err_w.end());
  }

  const std::size_t tail = std::max<std::size_t>(1, n / 5);
  double acc_b = 0.0;
  double acc_w = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) {
    acc_b += err_b[i] * err_b[i];
    acc_w += err_w[i] * err_w[i];
  }
  m.rmse_beta = std::sqrt(acc_b / static_cast<double>(tail));
  m.rmse_omega = std::sqrt(acc_w / static_cast<double>(tail));
  return m;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config '" + path + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }

  ExperimentConfig cfg;
  if (j.contains("name")) {
    cfg.name = require_string(j, "name", "");
  }

  const json& model = require_key(j, "model", "");
  cfg.model.total_mass = require_number(model, "total_mass", "model.");
  cfg.model.damping_ratio = require_number(model, "damping_ratio", "model.");
  cfg.model.sample_time = require_number(model, "sample_time", "model.");
  if (!(cfg.model.total_mass > 0.0)) {
    throw ConfigError("'model.total_mass' must be positive");
  }
  if (!(cfg.model.sample_time > 0.0)) {
    throw ConfigError("'model.sample_time' must be positive");
  }
  if (cfg.model.damping_ratio < 0.0) {
    throw ConfigError("'model.damping_ratio' must be nonnegative");
  }

  const json& filter = require_key(j, "filter", "");
  cfg.filter.kind = filter_kind_from_string(require_string(filter, "kind", "filter."));
  cfg.filter.x0 = require_vec4(filter, "x0", "filter.");
  cfg.filter.v0_diag = require_vec4(filter, "V0", "filter.");
  cfg.filter.q_diag = require_vec4(filter, "Q", "filter.");
  cfg.filter.r = require_number(filter, "R", "filter.");
  if ((cfg.filter.v0_diag.array() < 0.0).any() || (cfg.filter.q_diag.array() < 0.0).any()) {
    throw ConfigError("'filter.V0' and 'filter.Q' entries must be nonnegative");
  }
  if (!(cfg.filter.r > 0.0)) {
    throw ConfigError("'filter.R' must be positive");
  }
  cfg.filter.c0 = number_or(filter, "c0", 0.0);
  cfg.filter.decay = number_or(filter, "decay", 0.0);
  if (cfg.filter.kind == FilterKind::Rekf && !(cfg.filter.c0 > 0.0)) {
    throw ConfigError("'filter.c0' must be positive for the robust filter");
  }
  if (cfg.filter.decay < 0.0) {
    throw ConfigError("'filter.decay' must be nonnegative");
  }

  if (j.contains("truth")) {
    cfg.truth = parse_truth(j["truth"], cfg.filter.r);
  }
  if (j.contains("excitation")) {
    cfg.excitation = parse_excitation(j["excitation"], cfg.model.sample_time);
  }
  if (j.contains("metrics")) {
    const json& metrics = j["metrics"];
    cfg.metrics.threshold_beta = number_or(metrics, "threshold_beta", cfg.metrics.threshold_beta);
    cfg.metrics.threshold_omega =
        number_or(metrics, "threshold_omega", cfg.metrics.threshold_omega);
  }
  if (j.contains("seed")) {
    const json& seed = j["seed"];
    if (!seed.is_number_unsigned()) {
      throw ConfigError("'seed' must be a nonnegative integer");
    }
    cfg.seed = seed.get<std::uint64_t>();
  }
  if (j.contains("paths")) {
    const json& paths = j["paths"];
    if (paths.contains("signal")) cfg.paths.signal = require_string(paths, "signal", "paths.");
    if (paths.contains("truth")) cfg.paths.truth = require_string(paths, "truth", "paths.");
    if (paths.contains("trace")) cfg.paths.trace = require_string(paths, "trace", "paths.");
  }
  return cfg;
}

}  // namespace rekf::io
