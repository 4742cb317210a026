#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qdyne/chain.hpp"
#include "qdyne/readout.hpp"
#include "qdyne/rng.hpp"

namespace qdyne {

/// DFT power spectrum F_k = |sum_n z_n e^{i 2 pi n k / N}|^2, k = 0..N-1.
struct PowerSpectrum {
  std::vector<double> values;  // F_k [counts^2]
  double f_l = 0.0;            // sampling frequency [Hz]

  long size() const { return static_cast<long>(values.size()); }
  /// Bin width f_L / N [Hz].
  double bin_width() const { return f_l / static_cast<double>(size()); }
  double frequency_of(double k) const { return k * bin_width(); }
};

/// Four-parameter fit of the discrete line shape around the signal peak:
///   F_k = A [cosh(g) - cos(2 pi (k - d))] / [g^2 + 4 pi^2 (k - d)^2] + B.
struct PeakFit {
  double a = 0.0;            // amplitude A
  double b_floor = 0.0;      // offset B
  double gamma_bar = 0.0;    // dimensionless linewidth, >= 0
  double delta_bar_l = 0.0;  // peak position [bins]
  std::array<std::array<double, 4>, 4> covariance{};  // order (A, B, g, d)
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool gamma_pinned = false;  // gamma_bar held at the 0 boundary
};

struct FrequencyEstimate {
  double omega_hat = 0.0;    // [rad/s]
  double sigma_omega = 0.0;  // 1-sigma uncertainty [rad/s]
  std::vector<double> candidates;  // alias candidates considered [rad/s]
};

PowerSpectrum power_spectrum(const TimeTrace& trace);
PowerSpectrum power_spectrum(const std::vector<double>& samples, double f_l);

/// Direct single-bin evaluation of F at a (possibly non-integer) k.
double spectrum_value(const std::vector<double>& samples, double k);

/// <F_k> per the exact mean-spectrum identity: the spectrum of the mean
/// sequence plus the k-independent floor sum_n Var[z_n].
std::vector<double> theory_mean_spectrum(const std::vector<double>& means,
                                         const std::vector<double>& variances);

/// Harmonic population process P_n = a + b cos(phase_step (n-1) + phase0)
/// feeding a readout model; the test bench behind the spectral scaling
/// studies.
struct CosineProcess {
  double a = 0.5;
  double b = 0.3;
  double phase_step = 0.3 * 3.14159265358979323846;  // [rad per sample]
  double phase0 = 0.0;

  double population(long n) const;  // n is 1-based
};

struct ScalingStatistics {
  std::vector<long> n_values;
  std::vector<double> mean_peak;      // sample mean of F_{k_p} per N
  std::vector<double> var_peak;       // sample variance of F_{k_p} per N
  double c2 = 0.0;                    // <F_{k_p}>      ~ c2 N^2
  double c3 = 0.0;                    // (Delta F)^2    ~ c3 N^3
  double snr_slope = 0.0;             // d log R / d log N, R = mean/sqrt(var)
};

/// Ensemble measurement of the signal and fluctuation power laws at the
/// peak bin k_p = N phase_step / (2 pi), optionally shifted off-bin by
/// k_offset bins.
ScalingStatistics scaling_statistics(const CosineProcess& process,
                                     const ReadoutModel& model,
                                     const std::vector<long>& n_values,
                                     int realizations, std::uint64_t seed,
                                     double k_offset = 0.0);

/// Argmax of F_k over k in [guard_bins, N/2]; DC pedestal excluded.
/// Returns the index and the peak-to-floor ratio (floor = window median).
struct PeakLocation {
  long k = 0;
  double peak_to_floor = 0.0;
};
PeakLocation peak_search(const PowerSpectrum& spec, long guard_bins = 3);

/// Damped Gauss-Newton least squares of the four-parameter line shape
/// over [k_center - half_window, k_center + half_window].
PeakFit fit_peak(const PowerSpectrum& spec, long k_center, long half_window = 10,
                 int max_iterations = 200);

/// Invert delta_L = omega - 2 pi N_L f_L around a prior that localizes
/// the alias; both signs of delta_L are kept as candidates.
FrequencyEstimate reconstruct_frequency(const PeakFit& fit, long n_samples,
                                        double f_l, double omega_prior);

}  // namespace qdyne
