#include "qdyne/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "qdyne/metrology.hpp"
#include "qdyne/spectrum.hpp"

namespace qdyne {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * M_PI;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    if (allowed.find(item.key()) == allowed.end())
      throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + where);
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

}  // namespace

void ExperimentConfig::validate() const {
  field.validate();
  sensor.validate();
  seq.validate();
  readout.validate();
  chain.validate();
  if (noise_enabled) noise.validate();
  if (std::abs(seq.duration() - chain.t_s) > 1e-9 * chain.t_s)
    throw std::invalid_argument("config: chain.t_s inconsistent with the pulse sequence");
  if (realizations < 1) throw std::invalid_argument("config: realizations must be >= 1");
  if (ns_max < 1) throw std::invalid_argument("config: ns_max must be >= 1");
  if (phase_points < 2) throw std::invalid_argument("config: phase_points must be >= 2");
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["name"] = name;
  switch (analysis) {
    case AnalysisKind::PopulationSweep: j["analysis"] = "population_sweep"; break;
    case AnalysisKind::PhaseScan: j["analysis"] = "phase_scan"; break;
    case AnalysisKind::ContrastCurve: j["analysis"] = "contrast_curve"; break;
    case AnalysisKind::SpectralScaling: j["analysis"] = "spectral_scaling"; break;
    case AnalysisKind::ChainSpectroscopy: j["analysis"] = "chain_spectroscopy"; break;
  }
  j["field"] = {{"omega", field.omega},
                {"phi_s", field.phi_s},
                {"b", field.b},
                {"gamma", field.gamma}};
  j["sensor"] = {{"omega0", sensor.omega0}};
  j["sequence"] = {{"kind", seq.kind == SequenceKind::CPMG ? "cpmg" : "xy8"},
                   {"tau", seq.tau},
                   {"n_units", seq.n_units},
                   {"pulse_width", seq.pulse_width}};
  j["noise"] = {{"enabled", noise_enabled},
                {"tau_b", noise.tau_B},
                {"delta_b", noise.delta_B}};
  j["readout"] = {
      {"variant",
       readout.variant == ReadoutModel::Variant::Bernoulli ? "bernoulli" : "poisson"},
      {"mu0", readout.mu0},
      {"mu1", readout.mu1}};
  j["chain"] = {{"t_s", chain.t_s},
                {"t_r", chain.t_r},
                {"t_d", chain.t_d},
                {"n_runs", chain.n_runs},
                {"mode", chain.mode == ChainMode::NumericEq1 ? "numeric" : "analytic"}};
  j["analysis_options"] = {{"ns_max", ns_max},
                           {"c_threshold", c_threshold},
                           {"phase_points", phase_points},
                           {"realizations", realizations},
                           {"n_values", n_values},
                           {"guard_bins", guard_bins},
                           {"half_window", half_window},
                           {"prior_offset", prior_offset}};
  j["seed"] = seed;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  reject_unknown_keys(j,
                      {"schema_version", "name", "analysis", "field", "sensor",
                       "sequence", "noise", "readout", "chain",
                       "analysis_options", "seed"},
                      "document root");
  if (!j.contains("schema_version") ||
      j.at("schema_version").get<int>() != kConfigSchemaVersion)
    throw std::invalid_argument("config: missing or mismatched schema_version");

  ExperimentConfig c;
  c.name = j.value("name", "custom");
  const std::string kind = j.at("analysis").get<std::string>();
  if (kind == "population_sweep") c.analysis = AnalysisKind::PopulationSweep;
  else if (kind == "phase_scan") c.analysis = AnalysisKind::PhaseScan;
  else if (kind == "contrast_curve") c.analysis = AnalysisKind::ContrastCurve;
  else if (kind == "spectral_scaling") c.analysis = AnalysisKind::SpectralScaling;
  else if (kind == "chain_spectroscopy") c.analysis = AnalysisKind::ChainSpectroscopy;
  else throw std::invalid_argument("config: unknown analysis '" + kind + "'");

  const json& jf = j.at("field");
  reject_unknown_keys(jf, {"omega", "phi_s", "b", "gamma"}, "field");
  c.field.omega = jf.at("omega").get<double>();
  c.field.phi_s = jf.value("phi_s", 0.0);
  if (jf.contains("b")) c.field.b = jf.at("b").get<std::array<double, 3>>();
  c.field.gamma = jf.value("gamma", 0.0);

  const json& js = j.at("sensor");
  reject_unknown_keys(js, {"omega0"}, "sensor");
  c.sensor.omega0 = js.at("omega0").get<double>();

  const json& jq = j.at("sequence");
  reject_unknown_keys(jq, {"kind", "tau", "n_units", "pulse_width"}, "sequence");
  const std::string seq_kind = jq.value("kind", "cpmg");
  if (seq_kind == "cpmg") c.seq.kind = SequenceKind::CPMG;
  else if (seq_kind == "xy8") c.seq.kind = SequenceKind::XY8;
  else throw std::invalid_argument("config: unknown sequence kind '" + seq_kind + "'");
  c.seq.tau = jq.at("tau").get<double>();
  c.seq.n_units = jq.at("n_units").get<int>();
  c.seq.pulse_width = jq.value("pulse_width", 0.0);

  if (j.contains("noise")) {
    const json& jn = j.at("noise");
    reject_unknown_keys(jn, {"enabled", "tau_b", "delta_b"}, "noise");
    c.noise_enabled = jn.value("enabled", false);
    c.noise.tau_B = jn.value("tau_b", 1.0);
    c.noise.delta_B = jn.value("delta_b", 0.0);
  }

  const json& jr = j.at("readout");
  reject_unknown_keys(jr, {"variant", "mu0", "mu1"}, "readout");
  const std::string variant = jr.at("variant").get<std::string>();
  if (variant == "bernoulli") c.readout = ReadoutModel::bernoulli();
  else if (variant == "poisson")
    c.readout = ReadoutModel::poisson(jr.at("mu0").get<double>(),
                                      jr.at("mu1").get<double>());
  else throw std::invalid_argument("config: unknown readout variant '" + variant + "'");

  const json& jc = j.at("chain");
  reject_unknown_keys(jc, {"t_s", "t_r", "t_d", "n_runs", "mode"}, "chain");
  c.chain.t_s = jc.at("t_s").get<double>();
  c.chain.t_r = jc.at("t_r").get<double>();
  c.chain.t_d = jc.at("t_d").get<double>();
  c.chain.n_runs = jc.at("n_runs").get<long>();
  const std::string mode = jc.value("mode", "analytic");
  if (mode == "numeric") c.chain.mode = ChainMode::NumericEq1;
  else if (mode == "analytic") c.chain.mode = ChainMode::AnalyticEq3;
  else throw std::invalid_argument("config: unknown chain mode '" + mode + "'");

  if (j.contains("analysis_options")) {
    const json& ja = j.at("analysis_options");
    reject_unknown_keys(ja,
                        {"ns_max", "c_threshold", "phase_points", "realizations",
                         "n_values", "guard_bins", "half_window", "prior_offset"},
                        "analysis_options");
    c.ns_max = ja.value("ns_max", c.ns_max);
    c.c_threshold = ja.value("c_threshold", c.c_threshold);
    c.phase_points = ja.value("phase_points", c.phase_points);
    c.realizations = ja.value("realizations", c.realizations);
    if (ja.contains("n_values")) c.n_values = ja.at("n_values").get<std::vector<long>>();
    c.guard_bins = ja.value("guard_bins", c.guard_bins);
    c.half_window = ja.value("half_window", c.half_window);
    c.prior_offset = ja.value("prior_offset", c.prior_offset);
  }

  c.seed = j.at("seed").get<std::uint64_t>();
  c.chain.seed = c.seed;
  c.validate();
  return c;
}

ExperimentConfig preset(const std::string& name) {
  // Shared field/sensor/sequence parameters of the population figures and
  // the end-to-end chain: k_s/2pi = 50 kHz, tau = 0.5 us,
  // Delta/2pi = 1 MHz + 0.232 kHz on an 1801.5 MHz carrier.
  ExperimentConfig c;
  c.name = name;
  c.field.omega = kTwoPi * 1801501232.0;
  c.field.phi_s = 0.0;
  c.field.b = {0.0, kTwoPi * 50e3, 0.0};
  c.field.gamma = 0.0;
  c.sensor.omega0 = kTwoPi * 1800501000.0;
  c.seq = {SequenceKind::CPMG, 0.5e-6, 9, 0.0};
  c.noise_enabled = true;
  c.noise = {4e-3, kTwoPi * 100e3};
  c.chain.t_s = c.seq.duration();
  c.chain.t_r = 1e-6;
  c.chain.t_d = 100e-6 - c.chain.t_s - c.chain.t_r;  // f_L = 10 kHz
  c.chain.n_runs = 100000;
  c.chain.mode = ChainMode::AnalyticEq3;
  c.seed = 1;
  c.chain.seed = 1;

  if (name == "fig2a") {
    c.analysis = AnalysisKind::PopulationSweep;
    c.readout = ReadoutModel::bernoulli();
    c.ns_max = 40;
    c.realizations = 500;
  } else if (name == "fig2b") {
    c.analysis = AnalysisKind::PhaseScan;
    c.readout = ReadoutModel::bernoulli();
    c.phase_points = 32;
  } else if (name == "fig2c") {
    c.analysis = AnalysisKind::ContrastCurve;
    c.readout = ReadoutModel::bernoulli();
    c.ns_max = 15;
    c.c_threshold = 0.95;
  } else if (name == "fig3") {
    c.analysis = AnalysisKind::SpectralScaling;
    c.readout = ReadoutModel::poisson(0.1, 1.1);
    c.realizations = 500;
    c.n_values = {2000, 5000, 10000, 20000};
  } else if (name == "fig4") {
    c.analysis = AnalysisKind::ChainSpectroscopy;
    c.readout = ReadoutModel::poisson(0.7, 1.0);
    c.chain.n_runs = 100000;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

namespace {

int run_population_sweep(const ExperimentConfig& c,
                         const std::filesystem::path& out) {
  const RotatingFrameParams rf = derive_rotating_frame(c.field, c.sensor);
  auto csv = open_output(out / "population_sweep.csv");
  csv << "ns,t_s,p_analytic,p_numeric,p_noisy_dd,p_noisy_free\n";
  double max_gap = 0.0;
  for (int ns = 1; ns <= c.ns_max; ++ns) {
    PulseSequence seq = c.seq;
    seq.n_units = ns;
    const double dt_max = default_dt_max(rf, seq);
    RngStream null_rng(c.seed, 0);
    const double p_ana = analytic_population(rf, seq, rf.phi);
    const double p_num =
        simulate_single_run(rf, seq, nullptr, OuState{}, rf.phi, dt_max, null_rng)
            .first.p_plus;
    max_gap = std::max(max_gap, std::abs(p_num - p_ana));

    double sum_dd = 0.0;
    double sum_free = 0.0;
    if (c.noise_enabled) {
      for (int r = 0; r < c.realizations; ++r) {
        RngStream init_rng(c.seed, stream_id::kOuInit,
                           static_cast<std::uint64_t>(r));
        RngStream path_rng(c.seed, stream_id::kOuPath,
                           (static_cast<std::uint64_t>(ns) << 32) |
                               static_cast<std::uint64_t>(r));
        OuState ou0 = ou_init(c.noise, init_rng);
        sum_dd += simulate_single_run(rf, seq, &c.noise, ou0, rf.phi, dt_max,
                                      path_rng)
                      .first.p_plus;
        sum_free += simulate_free_evolution(rf, seq.duration(), &c.noise, ou0,
                                            rf.phi, dt_max, path_rng)
                        .first.p_plus;
      }
    }
    csv << ns << ',' << fmt_double(seq.duration()) << ',' << fmt_double(p_ana)
        << ',' << fmt_double(p_num) << ','
        << fmt_double(c.noise_enabled ? sum_dd / c.realizations : 0.0) << ','
        << fmt_double(c.noise_enabled ? sum_free / c.realizations : 0.0) << '\n';
  }
  std::cout << c.name << ": population sweep N_s=1.." << c.ns_max
            << ", max |P_numeric - P_analytic| = " << max_gap << "\n";
  return 0;
}

int run_phase_scan(const ExperimentConfig& c, const std::filesystem::path& out) {
  const RotatingFrameParams rf = derive_rotating_frame(c.field, c.sensor);
  const double dt_max = default_dt_max(rf, c.seq);
  auto csv = open_output(out / "phase_scan.csv");
  csv << "phi,p_analytic,p_analytic_plus_2pi,p_numeric\n";
  RngStream init_rng(c.seed, stream_id::kOuInit);
  RngStream path_rng(c.seed, stream_id::kOuPath);
  OuState ou = c.noise_enabled ? ou_init(c.noise, init_rng) : OuState{};
  const OuParams* noise = c.noise_enabled ? &c.noise : nullptr;
  double max_gap = 0.0;
  for (int i = 0; i < c.phase_points; ++i) {
    const double phi = kTwoPi * static_cast<double>(i) / c.phase_points;
    const double p_ana = analytic_population(rf, c.seq, phi);
    const double p_wrap = analytic_population(rf, c.seq, phi + kTwoPi);
    auto [res, advanced] =
        simulate_single_run(rf, c.seq, noise, ou, phi, dt_max, path_rng);
    ou = advanced;  // one continuous noise realization across the scan
    max_gap = std::max(max_gap, std::abs(res.p_plus - p_ana));
    csv << fmt_double(phi) << ',' << fmt_double(p_ana) << ','
        << fmt_double(p_wrap) << ',' << fmt_double(res.p_plus) << '\n';
  }
  std::cout << c.name << ": phase scan over " << c.phase_points
            << " points, max |P_numeric - P_analytic| = " << max_gap << "\n";
  return 0;
}

int run_contrast_curve(const ExperimentConfig& c,
                       const std::filesystem::path& out) {
  const RotatingFrameParams rf = derive_rotating_frame(c.field, c.sensor);
  auto csv = open_output(out / "contrast_curve.csv");
  csv << "ns,contrast\n";
  for (int ns = 1; ns <= c.ns_max; ++ns) {
    PulseSequence seq = c.seq;
    seq.n_units = ns;
    csv << ns << ',' << fmt_double(contrast(rf, seq)) << '\n';
  }
  json j;
  try {
    const int ns_star = find_saturation_ns(rf, c.seq.tau, c.c_threshold, c.ns_max);
    PulseSequence seq = c.seq;
    seq.n_units = ns_star;
    j["ns_star"] = ns_star;
    j["contrast_at_star"] = contrast(rf, seq);
    std::cout << c.name << ": contrast reaches " << c.c_threshold
              << " at N_s = " << ns_star << "\n";
  } catch (const std::exception& e) {
    j["error"] = e.what();
    std::cout << c.name << ": " << e.what() << "\n";
  }
  open_output(out / "saturation.json") << j.dump(2) << '\n';
  return 0;
}

int run_spectral_scaling(const ExperimentConfig& c,
                         const std::filesystem::path& out) {
  const CosineProcess process{};  // P_n = 0.5 + 0.3 cos[0.3 pi (n-1)]
  std::vector<long> n_values = c.n_values;
  if (n_values.empty()) n_values = {2000, 5000, 10000, 20000};
  const ScalingStatistics stats = scaling_statistics(
      process, c.readout, n_values, c.realizations, c.seed);
  auto csv = open_output(out / "peak_scaling.csv");
  csv << "n,mean_peak,var_peak\n";
  for (size_t i = 0; i < stats.n_values.size(); ++i)
    csv << stats.n_values[i] << ',' << fmt_double(stats.mean_peak[i]) << ','
        << fmt_double(stats.var_peak[i]) << '\n';
  json j;
  j["c2"] = stats.c2;
  j["c3"] = stats.c3;
  j["snr_slope"] = stats.snr_slope;
  j["realizations"] = c.realizations;
  open_output(out / "scaling.json") << j.dump(2) << '\n';
  std::cout << c.name << ": <F_kp> = " << stats.c2 << " N^2, (Delta F_kp)^2 = "
            << stats.c3 << " N^3, SNR slope = " << stats.snr_slope << "\n";
  return 0;
}

int run_chain_spectroscopy(const ExperimentConfig& c,
                           const std::filesystem::path& out) {
  const RotatingFrameParams rf = derive_rotating_frame(c.field, c.sensor);
  const RegimeReport regime = validate_regime(rf, c.field, c.sensor);
  if (!regime.ok)
    throw std::runtime_error("chain run outside the validity regime: k_s/|Delta| = " +
                             std::to_string(regime.ratio_lo));

  const OuParams* noise = c.noise_enabled ? &c.noise : nullptr;
  const TimeTrace trace = run_chain(c.chain, rf, c.field, c.seq, noise, c.readout);
  {
    auto csv = open_output(out / "trace.csv");
    write_trace_csv(trace, csv);
  }
  open_output(out / "trace.meta.json") << trace_metadata_json(trace) << '\n';

  const PowerSpectrum spec = power_spectrum(trace);
  {
    auto csv = open_output(out / "spectrum.csv");
    csv << "k,f_hz,F_k\n";
    for (long k = 0; k < spec.size(); ++k)
      csv << k << ',' << fmt_double(spec.frequency_of(static_cast<double>(k)))
          << ',' << fmt_double(spec.values[static_cast<size_t>(k)]) << '\n';
  }

  const PeakLocation loc = peak_search(spec, c.guard_bins);
  const PeakFit fit = fit_peak(spec, loc.k, c.half_window);
  const double omega_prior = c.field.omega + c.prior_offset;
  const FrequencyEstimate est =
      reconstruct_frequency(fit, trace.config.n_runs, trace.f_l, omega_prior);

  json jf;
  jf["a"] = fit.a;
  jf["b_floor"] = fit.b_floor;
  jf["gamma_bar"] = fit.gamma_bar;
  jf["delta_bar_l"] = fit.delta_bar_l;
  jf["covariance"] = fit.covariance;
  jf["residual_norm"] = fit.residual_norm;
  jf["iterations"] = fit.iterations;
  jf["gamma_pinned"] = fit.gamma_pinned;
  jf["candidates"] = est.candidates;
  open_output(out / "fit.json") << jf.dump(2) << '\n';

  const double delta_l_hz =
      fit.delta_bar_l * trace.f_l / static_cast<double>(trace.config.n_runs);
  json ja;
  ja["peak_bin"] = loc.k;
  ja["peak_to_floor"] = loc.peak_to_floor;
  ja["delta_l_hz"] = delta_l_hz;
  ja["omega_hat_hz"] = est.omega_hat / kTwoPi;
  ja["sigma_omega_hz"] = est.sigma_omega / kTwoPi;
  ja["omega_true_hz"] = c.field.omega / kTwoPi;
  open_output(out / "analysis.json") << ja.dump(2) << '\n';

  char line[256];
  std::snprintf(line, sizeof(line),
                "%s: delta_L/2pi = %.4f Hz, omega/2pi = %.4f Hz +/- %.4f Hz",
                c.name.c_str(), delta_l_hz, est.omega_hat / kTwoPi,
                est.sigma_omega / kTwoPi);
  std::cout << line << "\n";
  return 0;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  const std::filesystem::path out(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out.string());
  open_output(out / "config.json") << config.to_json() << '\n';

  switch (config.analysis) {
    case AnalysisKind::PopulationSweep: return run_population_sweep(config, out);
    case AnalysisKind::PhaseScan: return run_phase_scan(config, out);
    case AnalysisKind::ContrastCurve: return run_contrast_curve(config, out);
    case AnalysisKind::SpectralScaling: return run_spectral_scaling(config, out);
    case AnalysisKind::ChainSpectroscopy: return run_chain_spectroscopy(config, out);
  }
  return 1;
}

}  // namespace qdyne
