#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qdyne/dynamics.hpp"
#include "qdyne/ou.hpp"
#include "qdyne/physics.hpp"
#include "qdyne/readout.hpp"

namespace qdyne {

enum class ChainMode {
  NumericEq1,   // full piecewise propagation of the rotating-frame Hamiltonian
  AnalyticEq3,  // closed-form population (fast path; ignores O-U noise)
};

struct ChainConfig {
  double t_s = 0.0;  // interaction time per run [s]
  double t_r = 0.0;  // init + readout time [s]
  double t_d = 0.0;  // delay time [s]
  long n_runs = 1;   // N
  ChainMode mode = ChainMode::AnalyticEq3;
  std::uint64_t seed = 0;

  double t_l() const { return t_s + t_r + t_d; }
  double f_l() const { return 1.0 / t_l(); }
  void validate() const;
};

/// Qdyne chain output: photon counts z_n at clock times t_n = (n-1) T_L.
struct TimeTrace {
  std::vector<long> counts;
  double t_l = 0.0;
  double f_l = 0.0;
  ChainConfig config;

  double time_of(long n) const { return static_cast<double>(n - 1) * t_l; }
};

/// Alias decomposition omega = 2 pi N_L f_L + delta_L, |delta_L| <= pi f_L
/// with ties broken toward +pi f_L.
struct ReducedFrequency {
  double delta_l = 0.0;  // [rad/s]
  long n_l = 0;
};

ReducedFrequency reduce_frequency(double omega, double f_l);

/// Run N successive single measurements with clock-exact phase
/// bookkeeping phi_n = omega t_n + phi (mod 2pi), one continuous noise
/// trajectory (numeric mode) skip-advanced over the t_r + t_d dead time,
/// optional field phase diffusion for gamma > 0, and photon readout.
TimeTrace run_chain(const ChainConfig& cfg, const RotatingFrameParams& rf,
                    const SignalField& field, const PulseSequence& seq,
                    const OuParams* ou, const ReadoutModel& model);

/// As run_chain, but also returns the pre-readout populations P_n.
TimeTrace run_chain(const ChainConfig& cfg, const RotatingFrameParams& rf,
                    const SignalField& field, const PulseSequence& seq,
                    const OuParams* ou, const ReadoutModel& model,
                    std::vector<double>* populations);

/// CSV with columns n,t_n,z_n.
void write_trace_csv(const TimeTrace& trace, std::ostream& os);
/// JSON sidecar with the chain configuration and sampling parameters.
std::string trace_metadata_json(const TimeTrace& trace);

}  // namespace qdyne
