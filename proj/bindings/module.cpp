#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rekf/experiment.hpp"

namespace py = pybind11;

namespace {

// Convenience loop used by the python side: run one filter over arrays and
// hand back the whole trace as matrices.
py::dict run_filter(const rekf::NonlinearModel& model, Eigen::VectorXd x0, Eigen::MatrixXd v0,
                    const std::vector<double>& u, const std::vector<double>& y, bool robust,
                    double c0, double decay) {
  if (u.size() != y.size()) {
    throw std::domain_error("u and y must have the same length");
  }
  const auto n = static_cast<Eigen::Index>(u.size());
  const rekf::ToleranceSchedule schedule{c0, decay};
  rekf::GaussianBelief belief{std::move(x0), std::move(v0)};

  Eigen::MatrixXd state(n, model.state_dim);
  Eigen::MatrixXd variance(n, model.state_dim);
  Eigen::VectorXd theta(n);
  Eigen::VectorXd innovation(n);

  rekf::Vector ui(1);
  rekf::Vector yi(1);
  for (Eigen::Index i = 0; i < n; ++i) {
    ui[0] = u[static_cast<std::size_t>(i)];
    yi[0] = y[static_cast<std::size_t>(i)];
    rekf::StepOutput step = robust
                                ? rekf::rekf_step(belief, model, yi, ui, schedule.at(i))
                                : rekf::ekf_step(belief, model, yi, ui);
    state.row(i) = step.filtered_mean.transpose();
    variance.row(i) = step.predicted.covariance.diagonal().transpose();
    theta[i] = step.theta;
    innovation[i] = step.innovation[0];
    belief = std::move(step.predicted);
  }

  py::dict out;
  out["state"] = state;
  out["variance"] = variance;
  out["theta"] = theta;
  out["innovation"] = innovation;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust extended Kalman filtering core";

  py::register_exception<rekf::SolverError>(m, "SolverError");
  py::register_exception<rekf::NumericalError>(m, "NumericalError");

  py::class_<rekf::GaussianBelief>(m, "GaussianBelief")
      .def(py::init([](Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
             return rekf::GaussianBelief{std::move(mean), std::move(covariance)};
           }),
           py::arg("mean"), py::arg("covariance"))
      .def_readwrite("mean", &rekf::GaussianBelief::mean)
      .def_readwrite("covariance", &rekf::GaussianBelief::covariance);

  py::class_<rekf::ThetaSolution>(m, "ThetaSolution")
      .def_readonly("theta", &rekf::ThetaSolution::theta)
      .def_readonly("gamma_residual", &rekf::ThetaSolution::gamma_residual)
      .def_readonly("iterations", &rekf::ThetaSolution::iterations)
      .def_readonly("bracket_high", &rekf::ThetaSolution::bracket_high);

  py::class_<rekf::NonlinearModel>(m, "NonlinearModel")
      .def_readonly("state_dim", &rekf::NonlinearModel::state_dim)
      .def_readonly("input_dim", &rekf::NonlinearModel::input_dim)
      .def_readonly("output_dim", &rekf::NonlinearModel::output_dim)
      .def_readonly("noise_dim", &rekf::NonlinearModel::noise_dim)
      .def_readonly("noise_to_state", &rekf::NonlinearModel::noise_to_state)
      .def_readonly("noise_to_output", &rekf::NonlinearModel::noise_to_output);

  py::class_<rekf::StepOutput>(m, "StepOutput")
      .def_readonly("filtered_mean", &rekf::StepOutput::filtered_mean)
      .def_readonly("predicted", &rekf::StepOutput::predicted)
      .def_readonly("gain", &rekf::StepOutput::gain)
      .def_readonly("innovation", &rekf::StepOutput::innovation)
      .def_readonly("nominal_predicted_cov", &rekf::StepOutput::nominal_predicted_cov)
      .def_readonly("theta", &rekf::StepOutput::theta);

  m.def("gamma", &rekf::gamma, py::arg("P"), py::arg("theta"),
        "Divergence radius of the covariance inflation (P^-1 - theta I)^-1");
  m.def("kl_gaussian_zero_mean", &rekf::kl_gaussian_zero_mean, py::arg("V"), py::arg("P"));
  m.def("solve_theta", &rekf::solve_theta, py::arg("P"), py::arg("c"));
  m.def("robustify", &rekf::robustify, py::arg("P"), py::arg("c"));
  m.def("joint_noise_positive_definite", &rekf::joint_noise_positive_definite);
  m.def("ekf_step", &rekf::ekf_step, py::arg("belief"), py::arg("model"), py::arg("y"),
        py::arg("u"));
  m.def("rekf_step", &rekf::rekf_step, py::arg("belief"), py::arg("model"), py::arg("y"),
        py::arg("u"), py::arg("c"));
  m.def("run_filter", &run_filter, py::arg("model"), py::arg("x0"), py::arg("V0"), py::arg("u"),
        py::arg("y"), py::arg("robust"), py::arg("c0") = 0.0, py::arg("decay") = 0.0);

  auto housner = m.def_submodule("housner", "Sloshing-damper model");
  py::class_<rekf::housner::Params>(housner, "Params")
      .def(py::init<>())
      .def_readwrite("total_mass", &rekf::housner::Params::total_mass)
      .def_readwrite("damping_ratio", &rekf::housner::Params::damping_ratio)
      .def_readwrite("sample_time", &rekf::housner::Params::sample_time);
  housner.def("drift", &rekf::housner::drift, py::arg("x"), py::arg("u"), py::arg("params"));
  housner.def("measurement", &rekf::housner::measurement, py::arg("x"), py::arg("u"),
              py::arg("params"));
  housner.def("drift_jacobian", &rekf::housner::drift_jacobian);
  housner.def("measurement_jacobian", &rekf::housner::measurement_jacobian);
  housner.def("discrete_step", &rekf::housner::discrete_step);
  housner.def("discrete_jacobian", &rekf::housner::discrete_jacobian);
  housner.def("build_model", &rekf::housner::build_model, py::arg("params"),
              py::arg("process_variances"), py::arg("output_variance"));

  auto sim = m.def_submodule("sim", "Synthetic data generation");
  py::enum_<rekf::sim::ExcitationKind>(sim, "ExcitationKind")
      .value("SINE", rekf::sim::ExcitationKind::Sine)
      .value("CHIRP", rekf::sim::ExcitationKind::Chirp)
      .value("BANDLIMITED_NOISE", rekf::sim::ExcitationKind::BandlimitedNoise)
      .value("FROM_FILE", rekf::sim::ExcitationKind::FromFile);
  py::enum_<rekf::sim::NoiseKind>(sim, "NoiseKind")
      .value("GAUSSIAN", rekf::sim::NoiseKind::Gaussian)
      .value("STUDENT_T", rekf::sim::NoiseKind::StudentT);
  py::class_<rekf::sim::ExcitationSpec>(sim, "ExcitationSpec")
      .def(py::init<>())
      .def_readwrite("kind", &rekf::sim::ExcitationSpec::kind)
      .def_readwrite("duration", &rekf::sim::ExcitationSpec::duration)
      .def_readwrite("sample_time", &rekf::sim::ExcitationSpec::sample_time)
      .def_readwrite("amplitude", &rekf::sim::ExcitationSpec::amplitude)
      .def_readwrite("freq_hz", &rekf::sim::ExcitationSpec::freq_hz)
      .def_readwrite("f0_hz", &rekf::sim::ExcitationSpec::f0_hz)
      .def_readwrite("f1_hz", &rekf::sim::ExcitationSpec::f1_hz)
      .def_readwrite("cutoff_hz", &rekf::sim::ExcitationSpec::cutoff_hz)
      .def_readwrite("path", &rekf::sim::ExcitationSpec::path);
  py::class_<rekf::sim::ExcitationSignal>(sim, "ExcitationSignal")
      .def_readonly("sample_time", &rekf::sim::ExcitationSignal::sample_time)
      .def_readonly("samples", &rekf::sim::ExcitationSignal::samples);
  py::class_<rekf::sim::TruthSpec>(sim, "TruthSpec")
      .def(py::init<>())
      .def_readwrite("beta", &rekf::sim::TruthSpec::beta)
      .def_readwrite("omega", &rekf::sim::TruthSpec::omega)
      .def_readwrite("velocity0", &rekf::sim::TruthSpec::velocity0)
      .def_readwrite("displacement0", &rekf::sim::TruthSpec::displacement0)
      .def_readwrite("substeps", &rekf::sim::TruthSpec::substeps)
      .def_readwrite("noise_variance", &rekf::sim::TruthSpec::noise_variance)
      .def_readwrite("noise", &rekf::sim::TruthSpec::noise)
      .def_readwrite("student_dof", &rekf::sim::TruthSpec::student_dof);
  py::class_<rekf::sim::TruthTrajectory>(sim, "TruthTrajectory")
      .def_readonly("sample_time", &rekf::sim::TruthTrajectory::sample_time)
      .def_readonly("states", &rekf::sim::TruthTrajectory::states);
  sim.def("gen_excitation", &rekf::sim::gen_excitation, py::arg("spec"), py::arg("seed"));
  sim.def("simulate_truth", &rekf::sim::simulate_truth, py::arg("excitation"), py::arg("params"),
          py::arg("truth"));
  sim.def("synthesize_measurements", &rekf::sim::synthesize_measurements, py::arg("truth"),
          py::arg("excitation"), py::arg("params"), py::arg("spec"), py::arg("seed"));
}
