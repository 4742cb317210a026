#include "qdyne/metrology.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "qdyne/spectrum.hpp"

namespace qdyne {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// d/dx [sin(x)/x]
double sinc_prime(double x) {
  if (std::abs(x) < 1e-4) return -x / 3.0 + x * x * x / 30.0;
  return (std::cos(x) - sinc(x)) / x;
}

// phi_n = omega t_n + phi reduced mod 2 pi in extended precision; the
// raw product overflows double resolution at large n.
double clock_phase(double omega, double t_l, long n, double phi) {
  const long double cycles = static_cast<long double>(omega) / (2.0L * M_PI) *
                             static_cast<long double>(t_l);
  const long double turns =
      std::fmod(static_cast<long double>(n - 1) * std::fmod(cycles, 1.0L), 1.0L);
  return phi + 2.0 * M_PI * static_cast<double>(turns);
}

}  // namespace

QfiSingle qfi_single(long n, const RotatingFrameParams& rf,
                     const PulseSequence& seq, const ChainConfig& cfg,
                     double omega, double phi, double singular_clamp) {
  seq.validate();
  if (n < 1) throw std::invalid_argument("qfi_single: n must be >= 1");
  const double t_s = seq.duration();
  const double t_n = static_cast<double>(n - 1) * cfg.t_l();
  const double phi_n = clock_phase(omega, cfg.t_l(), n, phi);

  // Phi = (k_s T_s / pi) sinc(x) cos(x + phi_n), x = delta T_s / 2; both x
  // and phi_n depend on omega.
  const double delta_small = rf.delta - M_PI / seq.tau;
  const double x = 0.5 * delta_small * t_s;
  const double amp = rf.k_s * t_s / M_PI;
  const double big_phi = amp * sinc(x) * std::cos(x + phi_n);
  const double dphi_domega =
      amp * (sinc_prime(x) * 0.5 * t_s * std::cos(x + phi_n) -
             sinc(x) * std::sin(x + phi_n) * (0.5 * t_s + t_n));

  const double s = std::sin(big_phi - 0.25 * M_PI);
  const double p = s * s;
  double pq = p * (1.0 - p);
  const double dp_dphi = -std::cos(2.0 * big_phi);
  if (pq == 0.0)
    throw std::runtime_error("qfi_single: population at a degenerate point");
  const double clamp = singular_clamp * (1.0 - singular_clamp);
  if (pq < clamp) pq = clamp;

  QfiSingle out;
  out.exact = dp_dphi * dp_dphi / pq * dphi_domega * dphi_domega;
  const double sn = std::sin(phi_n);
  out.approx = 4.0 * rf.k_s * rf.k_s * t_s * t_s * (t_n + 0.5 * t_s) *
               (t_n + 0.5 * t_s) * sn * sn / (M_PI * M_PI);
  return out;
}

FisherReport qfi_chain(const RotatingFrameParams& rf, const PulseSequence& seq,
                       const ChainConfig& cfg, double omega, double phi) {
  cfg.validate();
  FisherReport report;
  report.per_run.reserve(cfg.n_runs);
  for (long n = 1; n <= cfg.n_runs; ++n) {
    const QfiSingle qi = qfi_single(n, rf, seq, cfg, omega, phi);
    report.per_run.push_back(qi.exact);
    report.total += qi.exact;
    report.approx_total += qi.approx;
  }
  const double t_s = seq.duration();
  const double t_l = cfg.t_l();
  const double big_n = static_cast<double>(cfg.n_runs);
  report.closed_form_total = 2.0 * rf.k_s * rf.k_s * t_s * t_s * t_l * t_l *
                             big_n * big_n * big_n / (3.0 * M_PI * M_PI);
  report.crb = (report.total > 0.0) ? 1.0 / std::sqrt(report.total) : 0.0;
  report.small_n_regime = cfg.n_runs < 100;
  return report;
}

PrecisionScalingResult crb_scaling_experiment(const PrecisionScalingConfig& cfg) {
  if (cfg.realizations < 2)
    throw std::invalid_argument("crb_scaling_experiment: need at least 2 realizations");
  if (cfg.n_values.empty())
    throw std::invalid_argument("crb_scaling_experiment: empty N sweep");

  const RotatingFrameParams rf = derive_rotating_frame(cfg.field, cfg.sensor);
  PrecisionScalingResult result;
  result.n_values = cfg.n_values;

  for (size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
    const long n = cfg.n_values[ni];
    // Estimates cluster within ~1e-11 of omega, so accumulate the offsets
    // from the true value; raw sums of squares lose every significant digit.
    std::vector<double> offsets;
    std::string last_error;
    for (int r = 0; r < cfg.realizations; ++r) {
      ChainConfig chain = cfg.chain;
      chain.n_runs = n;
      RngStream seeder(cfg.seed, stream_id::kEnsemble,
                       (static_cast<std::uint64_t>(ni) << 32) |
                           static_cast<std::uint64_t>(r));
      chain.seed = seeder();
      try {
        const TimeTrace trace =
            run_chain(chain, rf, cfg.field, cfg.seq, nullptr, cfg.model);
        const PowerSpectrum spec = power_spectrum(trace);
        const PeakLocation loc = peak_search(spec);
        const PeakFit fit = fit_peak(spec, loc.k, cfg.half_window);
        const FrequencyEstimate est =
            reconstruct_frequency(fit, n, trace.f_l, cfg.field.omega);
        offsets.push_back(est.omega_hat - cfg.field.omega);
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    if (offsets.size() < 2)
      throw std::runtime_error("crb_scaling_experiment: fits failed at N = " +
                               std::to_string(n) + ": " + last_error);
    double mean = 0.0;
    for (double d : offsets) mean += d;
    mean /= static_cast<double>(offsets.size());
    double var = 0.0;
    for (double d : offsets) var += (d - mean) * (d - mean);
    var /= static_cast<double>(offsets.size() - 1);
    result.sigma_empirical.push_back(std::sqrt(var));

    ChainConfig chain = cfg.chain;
    chain.n_runs = n;
    const FisherReport fisher =
        qfi_chain(rf, cfg.seq, chain, cfg.field.omega, rf.phi);
    result.sigma_crb.push_back(fisher.crb);
    result.ratio.push_back(result.sigma_empirical.back() / fisher.crb);
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(cfg.n_values.size());
  for (size_t i = 0; i < cfg.n_values.size(); ++i) {
    const double x = std::log(static_cast<double>(cfg.n_values[i]));
    const double y = std::log(result.sigma_empirical[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  result.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return result;
}

std::string precision_report_json(const PrecisionScalingResult& result) {
  nlohmann::json j;
  j["slope"] = result.slope;
  auto& points = j["points"];
  points = nlohmann::json::array();
  for (size_t i = 0; i < result.n_values.size(); ++i) {
    points.push_back({{"n", result.n_values[i]},
                      {"sigma_empirical", result.sigma_empirical[i]},
                      {"sigma_crb", result.sigma_crb[i]},
                      {"ratio", result.ratio[i]}});
  }
  return j.dump(2);
}

}  // namespace qdyne
