#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdyne/chain.hpp"
#include "qdyne/dynamics.hpp"
#include "qdyne/physics.hpp"
#include "qdyne/readout.hpp"

namespace qdyne {

/// Quantum Fisher information of one measurement with respect to the
/// target frequency, evaluated two ways.
struct QfiSingle {
  double exact = 0.0;   // full derivative of the closed-form rotation angle
  double approx = 0.0;  // small-detuning form 4 k_s^2 T_s^2 (t_n + T_s/2)^2 sin^2(...) / pi^2
};

struct FisherReport {
  std::vector<double> per_run;     // exact I_n [s^2]
  double total = 0.0;              // sum of per_run [s^2]
  double approx_total = 0.0;       // sum of the approximate form [s^2]
  double closed_form_total = 0.0;  // 2 k_s^2 T_s^2 T_L^2 N^3 / (3 pi^2) [s^2]
  double crb = 0.0;                // 1/sqrt(total) [rad/s]
  bool small_n_regime = false;     // closed form inapplicable for tiny N
};

/// QFI of the n-th measurement (1-based). omega is the absolute signal
/// frequency; phi the base signal phase. Populations within
/// `singular_clamp` of 0 or 1 are clamped before the division; exactly
/// degenerate points raise an error.
QfiSingle qfi_single(long n, const RotatingFrameParams& rf,
                     const PulseSequence& seq, const ChainConfig& cfg,
                     double omega, double phi, double singular_clamp = 1e-9);

FisherReport qfi_chain(const RotatingFrameParams& rf, const PulseSequence& seq,
                       const ChainConfig& cfg, double omega, double phi);

/// Ensemble experiment confronting the spectral-fit estimator with the
/// Cramer-Rao bound over a sweep of chain lengths.
struct PrecisionScalingConfig {
  SignalField field;
  Sensor sensor;
  PulseSequence seq;
  ChainConfig chain;  // n_runs and seed are overridden per point
  ReadoutModel model = ReadoutModel::bernoulli();
  std::vector<long> n_values;
  int realizations = 50;
  std::uint64_t seed = 0;
  long half_window = 10;
};

struct PrecisionScalingResult {
  std::vector<long> n_values;
  std::vector<double> sigma_empirical;  // std of omega_hat across chains [rad/s]
  std::vector<double> sigma_crb;        // Eq.-(10) closed-form bound [rad/s]
  std::vector<double> ratio;            // empirical / bound
  double slope = 0.0;                   // d log sigma_empirical / d log N
};

PrecisionScalingResult crb_scaling_experiment(const PrecisionScalingConfig& cfg);

std::string precision_report_json(const PrecisionScalingResult& result);

}  // namespace qdyne
