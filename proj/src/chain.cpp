#include "qdyne/chain.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace qdyne {

void ChainConfig::validate() const {
  if (!(t_s > 0.0) || !(t_r >= 0.0) || !(t_d >= 0.0) || !(t_l() > 0.0))
    throw std::invalid_argument("ChainConfig: times must give T_L > 0");
  if (n_runs < 1) throw std::invalid_argument("ChainConfig: n_runs must be >= 1");
}

ReducedFrequency reduce_frequency(double omega, double f_l) {
  if (!(f_l > 0.0)) throw std::invalid_argument("reduce_frequency: f_L must be > 0");
  const double r = omega / (2.0 * M_PI * f_l);
  // delta_L/(2 pi f_L) in (-1/2, 1/2]; ties toward the upper alias.
  const long n_l = static_cast<long>(std::ceil(r - 0.5));
  ReducedFrequency red;
  red.n_l = n_l;
  red.delta_l = omega - 2.0 * M_PI * static_cast<double>(n_l) * f_l;
  return red;
}

TimeTrace run_chain(const ChainConfig& cfg, const RotatingFrameParams& rf,
                    const SignalField& field, const PulseSequence& seq,
                    const OuParams* ou, const ReadoutModel& model) {
  return run_chain(cfg, rf, field, seq, ou, model, nullptr);
}

TimeTrace run_chain(const ChainConfig& cfg, const RotatingFrameParams& rf,
                    const SignalField& field, const PulseSequence& seq,
                    const OuParams* ou, const ReadoutModel& model,
                    std::vector<double>* populations) {
  cfg.validate();
  seq.validate();
  model.validate();
  if (std::abs(seq.duration() - cfg.t_s) > 1e-9 * cfg.t_s)
    throw std::invalid_argument("run_chain: cfg.t_s does not match the sequence duration");

  TimeTrace trace;
  trace.t_l = cfg.t_l();
  trace.f_l = cfg.f_l();
  trace.config = cfg;
  trace.counts.reserve(cfg.n_runs);
  if (populations != nullptr) {
    populations->clear();
    populations->reserve(cfg.n_runs);
  }

  // Signal cycles per chain period; only the fractional part enters
  // phi_n. Extended precision keeps the clock exact at N = 1e5.
  const long double cycles =
      static_cast<long double>(field.omega) / (2.0L * M_PI) *
      static_cast<long double>(trace.t_l);
  const long double cycles_frac = std::fmod(cycles, 1.0L);

  const bool numeric = cfg.mode == ChainMode::NumericEq1;
  const double dt_max = default_dt_max(rf, seq);
  const double dead_time = cfg.t_r + cfg.t_d;

  RngStream ou_init_rng(cfg.seed, stream_id::kOuInit);
  RngStream ou_path_rng(cfg.seed, stream_id::kOuPath);
  RngStream field_phase_rng(cfg.seed, stream_id::kFieldPhase);
  OuState ou_state;
  if (numeric && ou != nullptr) ou_state = ou_init(*ou, ou_init_rng);

  double diffusion_phase = 0.0;
  const double diffusion_step =
      (field.gamma > 0.0) ? std::sqrt(field.gamma * trace.t_l) : 0.0;

  for (long n = 1; n <= cfg.n_runs; ++n) {
    const long double turns =
        std::fmod(static_cast<long double>(n - 1) * cycles_frac, 1.0L);
    double phi_n = rf.phi + 2.0 * M_PI * static_cast<double>(turns) +
                   diffusion_phase;

    double p = 0.0;
    try {
      if (numeric) {
        auto [result, advanced] = simulate_single_run(
            rf, seq, ou, ou_state, phi_n, dt_max, ou_path_rng);
        p = result.p_plus;
        ou_state = advanced;
        if (ou != nullptr) ou_state = ou_advance(ou_state, *ou, dead_time, ou_path_rng);
      } else {
        p = analytic_population(rf, seq, phi_n);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("run_chain: run " + std::to_string(n) + ": " + e.what());
    }

    if (populations != nullptr) populations->push_back(p);
    RngStream readout_rng(cfg.seed, stream_id::kReadout, static_cast<std::uint64_t>(n));
    trace.counts.push_back(sample_photons(p, model, readout_rng));

    if (diffusion_step > 0.0)
      diffusion_phase += diffusion_step * standard_normal(field_phase_rng);
  }
  return trace;
}

void write_trace_csv(const TimeTrace& trace, std::ostream& os) {
  os << "n,t_n,z_n\n";
  char buf[64];
  for (long n = 1; n <= static_cast<long>(trace.counts.size()); ++n) {
    std::snprintf(buf, sizeof(buf), "%.17g", trace.time_of(n));
    os << n << ',' << buf << ',' << trace.counts[n - 1] << '\n';
  }
}

std::string trace_metadata_json(const TimeTrace& trace) {
  nlohmann::json j;
  j["n_runs"] = trace.config.n_runs;
  j["t_s"] = trace.config.t_s;
  j["t_r"] = trace.config.t_r;
  j["t_d"] = trace.config.t_d;
  j["t_l"] = trace.t_l;
  j["f_l"] = trace.f_l;
  j["mode"] = trace.config.mode == ChainMode::NumericEq1 ? "numeric" : "analytic";
  j["seed"] = trace.config.seed;
  return j.dump(2);
}

}  // namespace qdyne
