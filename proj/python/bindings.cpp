// pybind11 module exposing the core pipeline: field/sensor setup, chain
// simulation, spectral analysis, and the Fisher-information tools.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "qdyne/chain.hpp"
#include "qdyne/dynamics.hpp"
#include "qdyne/experiment.hpp"
#include "qdyne/metrology.hpp"
#include "qdyne/ou.hpp"
#include "qdyne/physics.hpp"
#include "qdyne/readout.hpp"
#include "qdyne/spectrum.hpp"

namespace py = pybind11;
using namespace qdyne;

PYBIND11_MODULE(_qdyne, m) {
  m.doc() = "Qdyne frequency-measurement simulator (C++ core)";

  // --- physics ------------------------------------------------------------

  py::class_<SignalField>(m, "SignalField")
      .def(py::init([](double omega, double phi_s, std::array<double, 3> b,
                       double gamma) {
             SignalField f{omega, phi_s, b, gamma};
             f.validate();
             return f;
           }),
           py::arg("omega"), py::arg("phi_s") = 0.0,
           py::arg("b") = std::array<double, 3>{0.0, 0.0, 0.0},
           py::arg("gamma") = 0.0)
      .def_readwrite("omega", &SignalField::omega)
      .def_readwrite("phi_s", &SignalField::phi_s)
      .def_readwrite("b", &SignalField::b)
      .def_readwrite("gamma", &SignalField::gamma);

  py::class_<Sensor>(m, "Sensor")
      .def(py::init([](double omega0) {
             Sensor s{omega0};
             s.validate();
             return s;
           }),
           py::arg("omega0"))
      .def_readwrite("omega0", &Sensor::omega0);

  py::class_<RotatingFrameParams>(m, "RotatingFrameParams")
      .def_readonly("delta", &RotatingFrameParams::delta)
      .def_readonly("k_s", &RotatingFrameParams::k_s)
      .def_readonly("theta", &RotatingFrameParams::theta)
      .def_readonly("phi", &RotatingFrameParams::phi);

  m.def("derive_rotating_frame", &derive_rotating_frame, py::arg("field"),
        py::arg("sensor"));

  py::class_<RegimeReport>(m, "RegimeReport")
      .def_readonly("ratio_lo", &RegimeReport::ratio_lo)
      .def_readonly("ratio_hi", &RegimeReport::ratio_hi)
      .def_readonly("ok", &RegimeReport::ok);

  m.def("validate_regime", &validate_regime, py::arg("rf"), py::arg("field"),
        py::arg("sensor"), py::arg("margin") = 10.0);

  // --- dynamics -----------------------------------------------------------

  py::enum_<SequenceKind>(m, "SequenceKind")
      .value("CPMG", SequenceKind::CPMG)
      .value("XY8", SequenceKind::XY8);

  py::class_<PulseSequence>(m, "PulseSequence")
      .def(py::init([](SequenceKind kind, double tau, int n_units,
                       double pulse_width) {
             PulseSequence s{kind, tau, n_units, pulse_width};
             s.validate();
             return s;
           }),
           py::arg("kind"), py::arg("tau"), py::arg("n_units"),
           py::arg("pulse_width") = 0.0)
      .def_readwrite("kind", &PulseSequence::kind)
      .def_readwrite("tau", &PulseSequence::tau)
      .def_readwrite("n_units", &PulseSequence::n_units)
      .def_readwrite("pulse_width", &PulseSequence::pulse_width)
      .def("duration", &PulseSequence::duration)
      .def("total_pulses", &PulseSequence::total_pulses);

  m.def("analytic_population", &analytic_population, py::arg("rf"),
        py::arg("seq"), py::arg("phase_offset"));
  m.def("analytic_phi", &analytic_phi, py::arg("rf"), py::arg("seq"),
        py::arg("phase_offset"));
  m.def("contrast", &contrast, py::arg("rf"), py::arg("seq"),
        py::arg("grid_points") = 1024);
  m.def("find_saturation_ns", &find_saturation_ns, py::arg("rf"),
        py::arg("tau"), py::arg("c_threshold"), py::arg("ns_max"));
  m.def(
      "simulate_single_run",
      [](const RotatingFrameParams& rf, const PulseSequence& seq,
         std::optional<OuParams> ou, double phase_offset, std::uint64_t seed) {
        RngStream init(seed, stream_id::kOuInit);
        RngStream path(seed, stream_id::kOuPath);
        OuState state = ou ? ou_init(*ou, init) : OuState{};
        const auto [res, _] =
            simulate_single_run(rf, seq, ou ? &*ou : nullptr, state,
                                phase_offset, default_dt_max(rf, seq), path);
        return res.p_plus;
      },
      py::arg("rf"), py::arg("seq"), py::arg("ou") = std::nullopt,
      py::arg("phase_offset") = 0.0, py::arg("seed") = 0,
      "Numeric population of one interaction window; returns P(|+>).");

  // --- noise and readout --------------------------------------------------

  py::class_<OuParams>(m, "OuParams")
      .def(py::init([](double tau_b, double delta_b) {
             OuParams p{tau_b, delta_b};
             p.validate();
             return p;
           }),
           py::arg("tau_b"), py::arg("delta_b"))
      .def_readwrite("tau_b", &OuParams::tau_B)
      .def_readwrite("delta_b", &OuParams::delta_B);

  py::class_<ReadoutModel>(m, "ReadoutModel")
      .def_static("bernoulli", &ReadoutModel::bernoulli)
      .def_static("poisson", &ReadoutModel::poisson, py::arg("mu0"),
                  py::arg("mu1"))
      .def_readonly("mu0", &ReadoutModel::mu0)
      .def_readonly("mu1", &ReadoutModel::mu1);

  m.def("count_mean", &count_mean, py::arg("p"), py::arg("model"));
  m.def("count_variance", &count_variance, py::arg("p"), py::arg("model"));

  // --- chain --------------------------------------------------------------

  py::enum_<ChainMode>(m, "ChainMode")
      .value("NumericEq1", ChainMode::NumericEq1)
      .value("AnalyticEq3", ChainMode::AnalyticEq3);

  py::class_<ChainConfig>(m, "ChainConfig")
      .def(py::init([](double t_s, double t_r, double t_d, long n_runs,
                       ChainMode mode, std::uint64_t seed) {
             ChainConfig c{t_s, t_r, t_d, n_runs, mode, seed};
             c.validate();
             return c;
           }),
           py::arg("t_s"), py::arg("t_r"), py::arg("t_d"), py::arg("n_runs"),
           py::arg("mode") = ChainMode::AnalyticEq3, py::arg("seed") = 0)
      .def_readwrite("t_s", &ChainConfig::t_s)
      .def_readwrite("t_r", &ChainConfig::t_r)
      .def_readwrite("t_d", &ChainConfig::t_d)
      .def_readwrite("n_runs", &ChainConfig::n_runs)
      .def_readwrite("mode", &ChainConfig::mode)
      .def_readwrite("seed", &ChainConfig::seed)
      .def("t_l", &ChainConfig::t_l)
      .def("f_l", &ChainConfig::f_l);

  py::class_<TimeTrace>(m, "TimeTrace")
      .def_readonly("counts", &TimeTrace::counts)
      .def_readonly("t_l", &TimeTrace::t_l)
      .def_readonly("f_l", &TimeTrace::f_l)
      .def("metadata_json", [](const TimeTrace& t) { return trace_metadata_json(t); })
      .def("csv", [](const TimeTrace& t) {
        std::ostringstream os;
        write_trace_csv(t, os);
        return os.str();
      });

  m.def(
      "run_chain",
      [](const ChainConfig& cfg, const RotatingFrameParams& rf,
         const SignalField& field, const PulseSequence& seq,
         std::optional<OuParams> ou, const ReadoutModel& model,
         bool return_populations) {
        std::vector<double> pops;
        const TimeTrace trace = run_chain(cfg, rf, field, seq,
                                          ou ? &*ou : nullptr, model,
                                          return_populations ? &pops : nullptr);
        if (!return_populations) return py::make_tuple(trace, py::none());
        return py::make_tuple(trace, py::cast(pops));
      },
      py::arg("cfg"), py::arg("rf"), py::arg("field"), py::arg("seq"),
      py::arg("ou") = std::nullopt, py::arg("model") = ReadoutModel::bernoulli(),
      py::arg("return_populations") = false,
      "Simulate a measurement chain; returns (trace, populations or None).");

  py::class_<ReducedFrequency>(m, "ReducedFrequency")
      .def_readonly("delta_l", &ReducedFrequency::delta_l)
      .def_readonly("n_l", &ReducedFrequency::n_l);

  m.def("reduce_frequency", &reduce_frequency, py::arg("omega"), py::arg("f_l"));

  // --- spectrum -----------------------------------------------------------

  py::class_<PowerSpectrum>(m, "PowerSpectrum")
      .def_readonly("values", &PowerSpectrum::values)
      .def_readonly("f_l", &PowerSpectrum::f_l)
      .def("bin_width", &PowerSpectrum::bin_width)
      .def("frequency_of", &PowerSpectrum::frequency_of);

  m.def("power_spectrum",
        py::overload_cast<const TimeTrace&>(&power_spectrum), py::arg("trace"));
  m.def("power_spectrum",
        py::overload_cast<const std::vector<double>&, double>(&power_spectrum),
        py::arg("samples"), py::arg("f_l"));
  m.def("spectrum_value", &spectrum_value, py::arg("samples"), py::arg("k"));

  py::class_<PeakLocation>(m, "PeakLocation")
      .def_readonly("k", &PeakLocation::k)
      .def_readonly("peak_to_floor", &PeakLocation::peak_to_floor);

  m.def("peak_search", &peak_search, py::arg("spec"), py::arg("guard_bins") = 3);

  py::class_<PeakFit>(m, "PeakFit")
      .def_readonly("a", &PeakFit::a)
      .def_readonly("b_floor", &PeakFit::b_floor)
      .def_readonly("gamma_bar", &PeakFit::gamma_bar)
      .def_readonly("delta_bar_l", &PeakFit::delta_bar_l)
      .def_readonly("covariance", &PeakFit::covariance)
      .def_readonly("residual_norm", &PeakFit::residual_norm)
      .def_readonly("iterations", &PeakFit::iterations)
      .def_readonly("converged", &PeakFit::converged)
      .def_readonly("gamma_pinned", &PeakFit::gamma_pinned);

  m.def("fit_peak", &fit_peak, py::arg("spec"), py::arg("k_center"),
        py::arg("half_window") = 10, py::arg("max_iterations") = 200);

  py::class_<FrequencyEstimate>(m, "FrequencyEstimate")
      .def_readonly("omega_hat", &FrequencyEstimate::omega_hat)
      .def_readonly("sigma_omega", &FrequencyEstimate::sigma_omega)
      .def_readonly("candidates", &FrequencyEstimate::candidates);

  m.def("reconstruct_frequency", &reconstruct_frequency, py::arg("fit"),
        py::arg("n_samples"), py::arg("f_l"), py::arg("omega_prior"));

  // --- metrology ----------------------------------------------------------

  py::class_<FisherReport>(m, "FisherReport")
      .def_readonly("per_run", &FisherReport::per_run)
      .def_readonly("total", &FisherReport::total)
      .def_readonly("approx_total", &FisherReport::approx_total)
      .def_readonly("closed_form_total", &FisherReport::closed_form_total)
      .def_readonly("crb", &FisherReport::crb)
      .def_readonly("small_n_regime", &FisherReport::small_n_regime);

  m.def("qfi_chain", &qfi_chain, py::arg("rf"), py::arg("seq"), py::arg("cfg"),
        py::arg("omega"), py::arg("phi"));

  // --- experiment presets -------------------------------------------------

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_static("from_json", &ExperimentConfig::from_json, py::arg("text"))
      .def("to_json", &ExperimentConfig::to_json)
      .def_property_readonly("name",
                             [](const ExperimentConfig& c) { return c.name; });

  m.def("preset", &preset, py::arg("name"));
  m.def("run_experiment", &run_experiment, py::arg("config"),
        py::arg("out_dir"));
}
