#include "qdyne/spectrum.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qdyne {

namespace {

/// Line-shape kernel [cosh(g) - cos(2 pi u)] / [g^2 + 4 pi^2 u^2] with the
/// removable singularity at g = u = 0 handled by its series value 1/2.
double peak_kernel(double g, double u) {
  const double tpu = 2.0 * M_PI * u;
  const double denom = g * g + tpu * tpu;
  if (denom < 1e-10) return 0.5 + (g * g - tpu * tpu) / 24.0;
  return (std::cosh(g) - std::cos(tpu)) / denom;
}

double fit_model(const double* p, double k) {
  // p = (A, B, g, d)
  return p[0] * peak_kernel(p[2], k - p[3]) + p[1];
}

double median(std::vector<double> v) {
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

}  // namespace

PowerSpectrum power_spectrum(const TimeTrace& trace) {
  std::vector<double> samples(trace.counts.begin(), trace.counts.end());
  return power_spectrum(samples, trace.f_l);
}

PowerSpectrum power_spectrum(const std::vector<double>& samples, double f_l) {
  const long n = static_cast<long>(samples.size());
  if (n < 2) throw std::invalid_argument("power_spectrum: need at least 2 samples");

  std::vector<double> in(samples);
  std::vector<fftw_complex> out(static_cast<size_t>(n / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                        FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  if (plan == nullptr) throw std::runtime_error("power_spectrum: fftw plan failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  PowerSpectrum spec;
  spec.f_l = f_l;
  spec.values.resize(static_cast<size_t>(n));
  for (long k = 0; k <= n / 2; ++k) {
    const double re = out[static_cast<size_t>(k)][0];
    const double im = out[static_cast<size_t>(k)][1];
    spec.values[static_cast<size_t>(k)] = re * re + im * im;
  }
  for (long k = n / 2 + 1; k < n; ++k)  // real input: F_k = F_{N-k}
    spec.values[static_cast<size_t>(k)] = spec.values[static_cast<size_t>(n - k)];
  return spec;
}

double spectrum_value(const std::vector<double>& samples, double k) {
  const long n = static_cast<long>(samples.size());
  if (n < 2) throw std::invalid_argument("spectrum_value: need at least 2 samples");
  const double step = 2.0 * M_PI * k / static_cast<double>(n);
  double re = 0.0;
  double im = 0.0;
  for (long m = 1; m <= n; ++m) {
    const double arg = step * static_cast<double>(m);
    re += samples[static_cast<size_t>(m - 1)] * std::cos(arg);
    im += samples[static_cast<size_t>(m - 1)] * std::sin(arg);
  }
  return re * re + im * im;
}

std::vector<double> theory_mean_spectrum(const std::vector<double>& means,
                                         const std::vector<double>& variances) {
  if (means.size() != variances.size())
    throw std::invalid_argument("theory_mean_spectrum: array length mismatch");
  const long n = static_cast<long>(means.size());
  double floor = 0.0;
  for (double v : variances) floor += v;
  PowerSpectrum mean_spec = power_spectrum(means, 1.0);
  std::vector<double> out(static_cast<size_t>(n));
  for (long k = 0; k < n; ++k)
    out[static_cast<size_t>(k)] = mean_spec.values[static_cast<size_t>(k)] + floor;
  return out;
}

double CosineProcess::population(long n) const {
  return a + b * std::cos(phase_step * static_cast<double>(n - 1) + phase0);
}

ScalingStatistics scaling_statistics(const CosineProcess& process,
                                     const ReadoutModel& model,
                                     const std::vector<long>& n_values,
                                     int realizations, std::uint64_t seed,
                                     double k_offset) {
  if (realizations < 2)
    throw std::invalid_argument("scaling_statistics: need at least 2 realizations");
  ScalingStatistics stats;
  stats.n_values = n_values;

  std::vector<double> z;
  for (size_t ni = 0; ni < n_values.size(); ++ni) {
    const long n = n_values[ni];
    const double k_exact = process.phase_step * static_cast<double>(n) / (2.0 * M_PI);
    if (k_offset == 0.0 && std::abs(k_exact - std::round(k_exact)) > 1e-9)
      throw std::invalid_argument("scaling_statistics: k_p is not on-bin for N = " +
                                  std::to_string(n));
    const double k_p = k_exact + k_offset;

    double sum = 0.0;
    double sum_sq = 0.0;
    z.resize(static_cast<size_t>(n));
    for (int r = 0; r < realizations; ++r) {
      RngStream rng(seed, stream_id::kEnsemble,
                    (static_cast<std::uint64_t>(ni) << 32) | static_cast<std::uint64_t>(r));
      for (long m = 1; m <= n; ++m)
        z[static_cast<size_t>(m - 1)] =
            static_cast<double>(sample_photons(process.population(m), model, rng));
      const double f = spectrum_value(z, k_p);
      sum += f;
      sum_sq += f * f;
    }
    const double mean = sum / realizations;
    const double var = (sum_sq - realizations * mean * mean) / (realizations - 1);
    stats.mean_peak.push_back(mean);
    stats.var_peak.push_back(var);
  }

  // Pure power-law amplitude fits with pinned exponents.
  double num2 = 0.0, den2 = 0.0, num3 = 0.0, den3 = 0.0;
  for (size_t i = 0; i < n_values.size(); ++i) {
    const double n2 = std::pow(static_cast<double>(n_values[i]), 2.0);
    const double n3 = std::pow(static_cast<double>(n_values[i]), 3.0);
    num2 += stats.mean_peak[i] * n2;
    den2 += n2 * n2;
    num3 += stats.var_peak[i] * n3;
    den3 += n3 * n3;
  }
  if (den2 <= 0.0 || den3 <= 0.0)
    throw std::runtime_error("scaling_statistics: ill-conditioned power-law fit");
  stats.c2 = num2 / den2;
  stats.c3 = num3 / den3;

  // log-log slope of R = mean / sqrt(var) against N.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(n_values.size());
  for (size_t i = 0; i < n_values.size(); ++i) {
    const double x = std::log(static_cast<double>(n_values[i]));
    const double y = std::log(stats.mean_peak[i] / std::sqrt(stats.var_peak[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  stats.snr_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return stats;
}

PeakLocation peak_search(const PowerSpectrum& spec, long guard_bins) {
  if (guard_bins < 1) throw std::invalid_argument("peak_search: guard_bins must be >= 1");
  const long n = spec.size();
  const long hi = n / 2;
  if (guard_bins > hi) throw std::invalid_argument("peak_search: empty search range");
  long best = guard_bins;
  std::vector<double> window;
  window.reserve(static_cast<size_t>(hi - guard_bins + 1));
  for (long k = guard_bins; k <= hi; ++k) {
    window.push_back(spec.values[static_cast<size_t>(k)]);
    if (spec.values[static_cast<size_t>(k)] > spec.values[static_cast<size_t>(best)])
      best = k;
  }
  const double floor = median(std::move(window));
  PeakLocation loc;
  loc.k = best;
  loc.peak_to_floor = (floor > 0.0)
                          ? spec.values[static_cast<size_t>(best)] / floor
                          : std::numeric_limits<double>::infinity();
  return loc;
}

PeakFit fit_peak(const PowerSpectrum& spec, long k_center, long half_window,
                 int max_iterations) {
  const long n = spec.size();
  if (half_window < 4) throw std::invalid_argument("fit_peak: half_window must be >= 4");
  if (k_center - half_window < 0 || k_center + half_window >= n)
    throw std::invalid_argument("fit_peak: window not fully inside the spectrum");

  const long m = 2 * half_window + 1;
  Eigen::VectorXd ks(m), fs(m);
  std::vector<double> window_vals;
  window_vals.reserve(static_cast<size_t>(m));
  for (long i = 0; i < m; ++i) {
    const long k = k_center - half_window + i;
    ks(i) = static_cast<double>(k);
    fs(i) = spec.values[static_cast<size_t>(k)];
    window_vals.push_back(fs(i));
  }

  // Initialization: three-point quadratic vertex for the position, the
  // window median for the floor, the gamma->0 on-peak kernel value A/2
  // for the amplitude.
  const double f0 = spec.values[static_cast<size_t>(k_center)];
  const double fm = spec.values[static_cast<size_t>(k_center - 1)];
  const double fp = spec.values[static_cast<size_t>(k_center + 1)];
  const double curv = 2.0 * f0 - fm - fp;
  double d0 = static_cast<double>(k_center);
  if (curv > 0.0) d0 += 0.5 * (fp - fm) / curv;
  const double b0 = median(window_vals);
  double p[4] = {std::max(2.0 * (f0 - b0), 1e-12), b0, 0.1, d0};

  // Periodogram bins are heteroscedastic: Var[F_k] ~ B^2 + 2 S_k B where
  // S_k is the signal part and B the noise floor. Weight accordingly
  // (floor bins get weight 1) so the peak bins do not dominate the fit;
  // this is what keeps the position-linewidth covariance honest.
  Eigen::VectorXd sw(m);
  const double b_scale = std::max(b0, 1e-9 * std::max(f0, 1.0));
  for (long i = 0; i < m; ++i)
    sw(i) = 1.0 / std::sqrt(1.0 + 2.0 * std::max(fs(i) - b_scale, 0.0) / b_scale);

  auto cost_of = [&](const double* q) {
    double c = 0.0;
    for (long i = 0; i < m; ++i) {
      const double r = sw(i) * (fit_model(q, ks(i)) - fs(i));
      c += r * r;
    }
    return c;
  };

  double lambda = 1e-3;
  double cost = cost_of(p);
  PeakFit fit;
  Eigen::MatrixXd jac(m, 4);
  Eigen::VectorXd res(m);
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    for (long i = 0; i < m; ++i) {
      const double k = ks(i);
      res(i) = sw(i) * (fit_model(p, k) - fs(i));
      jac(i, 0) = sw(i) * peak_kernel(p[2], k - p[3]);
      jac(i, 1) = sw(i);
      // numeric derivatives for the nonlinear parameters
      const double hg = 1e-6 * std::max(1.0, std::abs(p[2]));
      double q[4] = {p[0], p[1], p[2] + hg, p[3]};
      const double up_g = fit_model(q, k);
      q[2] = p[2] - hg;
      jac(i, 2) = sw(i) * (up_g - fit_model(q, k)) / (2.0 * hg);
      const double hd = 1e-6 * std::max(1.0, std::abs(p[3]));
      q[2] = p[2];
      q[3] = p[3] + hd;
      const double up_d = fit_model(q, k);
      q[3] = p[3] - hd;
      jac(i, 3) = sw(i) * (up_d - fit_model(q, k)) / (2.0 * hd);
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * res;
    bool improved = false;
    for (int attempt = 0; attempt < 24; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int j = 0; j < 4; ++j)
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-30);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      double trial[4] = {p[0] + step(0), p[1] + step(1), p[2] + step(2),
                         p[3] + step(3)};
      if (trial[2] < 0.0) trial[2] = 0.0;  // linewidth boundary
      const double trial_cost = cost_of(trial);
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const double drop = cost - trial_cost;
        std::copy(trial, trial + 4, p);
        cost = trial_cost;
        lambda = std::max(lambda * 0.3, 1e-14);
        improved = true;
        if (drop <= 1e-12 * (cost + 1e-300)) {
          fit.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!improved || fit.converged) {
      fit.converged = true;
      break;
    }
  }
  if (iter == max_iterations)
    throw std::runtime_error("fit_peak: no convergence within max_iterations");

  fit.a = p[0];
  fit.b_floor = p[1];
  fit.gamma_bar = p[2];
  fit.delta_bar_l = p[3];
  fit.gamma_pinned = p[2] == 0.0;
  fit.iterations = iter + 1;
  fit.residual_norm = std::sqrt(cost);

  // Parameter covariance from the Jacobian at the optimum.
  for (long i = 0; i < m; ++i) {
    const double k = ks(i);
    jac(i, 0) = sw(i) * peak_kernel(p[2], k - p[3]);
    jac(i, 1) = sw(i);
    const double hg = 1e-6 * std::max(1.0, std::abs(p[2]));
    double q[4] = {p[0], p[1], p[2] + hg, p[3]};
    const double up_g = fit_model(q, k);
    q[2] = p[2] - hg;
    if (q[2] < 0.0) q[2] = 0.0;
    jac(i, 2) = sw(i) * (up_g - fit_model(q, k)) / (hg + (p[2] - q[2]));
    const double hd = 1e-6 * std::max(1.0, std::abs(p[3]));
    q[2] = p[2];
    q[3] = p[3] + hd;
    const double up_d = fit_model(q, k);
    q[3] = p[3] - hd;
    jac(i, 3) = sw(i) * (up_d - fit_model(q, k)) / (2.0 * hd);
  }
  const double dof = static_cast<double>(m - 4);
  const double sigma_sq = cost / std::max(dof, 1.0);
  const Eigen::MatrixXd cov =
      sigma_sq * (jac.transpose() * jac)
                     .completeOrthogonalDecomposition()
                     .pseudoInverse();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) fit.covariance[r][c] = cov(r, c);
  return fit;
}

FrequencyEstimate reconstruct_frequency(const PeakFit& fit, long n_samples,
                                        double f_l, double omega_prior) {
  if (n_samples < 2 || !(f_l > 0.0))
    throw std::invalid_argument("reconstruct_frequency: invalid trace metadata");
  const double delta_l =
      2.0 * M_PI * fit.delta_bar_l * f_l / static_cast<double>(n_samples);
  const double sigma_delta =
      2.0 * M_PI * std::sqrt(std::max(fit.covariance[3][3], 0.0)) * f_l /
      static_cast<double>(n_samples);

  FrequencyEstimate est;
  const double two_pi_fl = 2.0 * M_PI * f_l;
  const long m_center = std::lround(omega_prior / two_pi_fl);
  for (long m = m_center - 1; m <= m_center + 1; ++m) {
    if (m <= 0) continue;
    // A real-valued trace cannot distinguish +-delta_L.
    est.candidates.push_back(static_cast<double>(m) * two_pi_fl + delta_l);
    est.candidates.push_back(static_cast<double>(m) * two_pi_fl - delta_l);
  }
  if (est.candidates.empty())
    throw std::runtime_error("reconstruct_frequency: no alias candidates near prior");

  std::sort(est.candidates.begin(), est.candidates.end(),
            [&](double x, double y) {
              return std::abs(x - omega_prior) < std::abs(y - omega_prior);
            });
  const double sigma = std::max(sigma_delta, 1e-300);
  int within = 0;
  for (double c : est.candidates)
    if (std::abs(c - omega_prior) <= 3.0 * sigma) ++within;
  if (within >= 2 &&
      std::abs(est.candidates[1] - est.candidates[0]) > 3.0 * sigma)
    throw std::runtime_error("reconstruct_frequency: ambiguous alias near prior");

  est.omega_hat = est.candidates.front();
  est.sigma_omega = sigma_delta;
  return est;
}

}  // namespace qdyne
