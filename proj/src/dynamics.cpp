#include "qdyne/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qdyne {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace

void PulseSequence::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("PulseSequence: tau must be > 0");
  if (n_units < 1) throw std::invalid_argument("PulseSequence: n_units must be >= 1");
  if (!(pulse_width >= 0.0) || pulse_width >= tau)
    throw std::invalid_argument("PulseSequence: pulse_width must be in [0, tau)");
}

PulseAxis PulseSequence::pulse_axis(int i) const {
  if (kind == SequenceKind::CPMG) return PulseAxis::X;
  static constexpr PulseAxis xy8[8] = {PulseAxis::X, PulseAxis::Y, PulseAxis::X,
                                       PulseAxis::Y, PulseAxis::Y, PulseAxis::X,
                                       PulseAxis::Y, PulseAxis::X};
  return xy8[i % 8];
}

QubitState apply_rotation(const QubitState& state, double nx, double ny,
                          double nz, double angle) {
  const double len = std::sqrt(nx * nx + ny * ny + nz * nz);
  if (len == 0.0 || angle == 0.0) return state;
  nx /= len;
  ny /= len;
  nz /= len;
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  const std::complex<double> i_s(0.0, s);
  // exp(-i angle/2 n.sigma) = cos I - i sin n.sigma
  QubitState out;
  out.c0 = (c - i_s * nz) * state.c0 - i_s * std::complex<double>(nx, -ny) * state.c1;
  out.c1 = -i_s * std::complex<double>(nx, ny) * state.c0 + (c + i_s * nz) * state.c1;
  return out;
}

QubitState apply_pulse(const QubitState& state, PulseAxis axis, double angle) {
  return axis == PulseAxis::X ? apply_rotation(state, 1.0, 0.0, 0.0, angle)
                              : apply_rotation(state, 0.0, 1.0, 0.0, angle);
}

QubitState propagate_piecewise(const QubitState& state, const PauliCoeffFn& coeffs,
                               double t0, double t1, double dt_max) {
  if (!(t1 >= t0)) throw std::invalid_argument("propagate_piecewise: t1 must be >= t0");
  if (!(dt_max > 0.0)) throw std::invalid_argument("propagate_piecewise: dt_max must be > 0");
  const double span = t1 - t0;
  if (span == 0.0) return state;
  const long n_steps = std::max(1L, static_cast<long>(std::ceil(span / dt_max)));
  const double dt = span / static_cast<double>(n_steps);
  QubitState s = state;
  for (long i = 0; i < n_steps; ++i) {
    const double tm = t0 + (static_cast<double>(i) + 0.5) * dt;
    const auto h = coeffs(tm);
    if (!std::isfinite(h[0]) || !std::isfinite(h[1]) || !std::isfinite(h[2]))
      throw std::runtime_error("propagate_piecewise: non-finite Hamiltonian coefficients");
    const double mag = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
    if (mag > 0.0) s = apply_rotation(s, h[0], h[1], h[2], 2.0 * mag * dt);
  }
  return s;
}

double default_dt_max(const RotatingFrameParams& rf, const PulseSequence& seq) {
  const double period = (rf.delta != 0.0) ? 2.0 * M_PI / std::abs(rf.delta)
                                          : seq.tau;
  return std::min(seq.tau, period) / 200.0;
}

namespace {

// Free evolution over [t0, t1] under the rotating-frame signal plus an
// optional constant extra axis term (finite-width pulse drive), with the
// O-U value held constant on each sub-step and advanced alongside.
void evolve_window(QubitState& state, const RotatingFrameParams& rf,
                   double phase_offset, double t0, double t1, double dt_max,
                   const std::array<double, 3>& drive, const OuParams* ou,
                   OuState& ou_state, RngStream& rng) {
  const double span = t1 - t0;
  if (span <= 0.0) return;
  const long n_steps = std::max(1L, static_cast<long>(std::ceil(span / dt_max)));
  const double dt = span / static_cast<double>(n_steps);
  for (long i = 0; i < n_steps; ++i) {
    const double tm = t0 + (static_cast<double>(i) + 0.5) * dt;
    const double noise = (ou != nullptr) ? ou_state.value : 0.0;
    auto h = hamiltonian_coeffs_rotating({rf.delta, rf.k_s, rf.theta, phase_offset},
                                         noise, tm);
    h[0] += drive[0];
    h[1] += drive[1];
    h[2] += drive[2];
    const double mag = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
    if (mag > 0.0) state = apply_rotation(state, h[0], h[1], h[2], 2.0 * mag * dt);
    if (ou != nullptr) ou_state = ou_advance(ou_state, *ou, dt, rng);
  }
}

}  // namespace

std::pair<SingleRunResult, OuState> simulate_single_run(
    const RotatingFrameParams& rf, const PulseSequence& seq, const OuParams* ou,
    OuState ou_state, double phase_offset, double dt_max, RngStream& rng) {
  seq.validate();
  if (!(dt_max > 0.0)) throw std::invalid_argument("simulate_single_run: dt_max must be > 0");

  QubitState state = QubitState::excited();
  const int n_pulses = seq.total_pulses();
  const double w = seq.pulse_width;
  const std::array<double, 3> no_drive{0.0, 0.0, 0.0};
  for (int i = 0; i < n_pulses; ++i) {
    const double t_a = static_cast<double>(i) * seq.tau;
    const double t_b = static_cast<double>(i + 1) * seq.tau;
    const PulseAxis axis = seq.pulse_axis(i);
    if (w == 0.0) {
      evolve_window(state, rf, phase_offset, t_a, t_b, dt_max, no_drive, ou,
                    ou_state, rng);
      state = apply_pulse(state, axis, M_PI);
    } else {
      // The pulse occupies the tail of the interval; the signal keeps
      // acting during the drive.
      evolve_window(state, rf, phase_offset, t_a, t_b - w, dt_max, no_drive, ou,
                    ou_state, rng);
      const double rabi = 0.5 * M_PI / w;
      const std::array<double, 3> drive =
          (axis == PulseAxis::X) ? std::array<double, 3>{rabi, 0.0, 0.0}
                                 : std::array<double, 3>{0.0, rabi, 0.0};
      evolve_window(state, rf, phase_offset, t_b - w, t_b, std::min(dt_max, w / 16.0),
                    drive, ou, ou_state, rng);
    }
  }
  return {{state.p_plus(), seq.duration()}, ou_state};
}

std::pair<SingleRunResult, OuState> simulate_free_evolution(
    const RotatingFrameParams& rf, double duration, const OuParams* ou,
    OuState ou_state, double phase_offset, double dt_max, RngStream& rng) {
  if (!(duration >= 0.0)) throw std::invalid_argument("simulate_free_evolution: duration must be >= 0");
  if (!(dt_max > 0.0)) throw std::invalid_argument("simulate_free_evolution: dt_max must be > 0");
  QubitState state = QubitState::excited();
  evolve_window(state, rf, phase_offset, 0.0, duration, dt_max,
                {0.0, 0.0, 0.0}, ou, ou_state, rng);
  return {{state.p_plus(), duration}, ou_state};
}

double analytic_phi(const RotatingFrameParams& rf, const PulseSequence& seq,
                    double phase_offset) {
  seq.validate();
  const double t_s = seq.duration();
  const double delta_small = rf.delta - M_PI / seq.tau;
  const double half = 0.5 * delta_small * t_s;
  // Reduce the phase first (std::remainder is exact) so the closed form
  // is periodic as computed, not just up to argument rounding.
  const double phase = std::remainder(phase_offset, 2.0 * M_PI);
  return (rf.k_s * t_s / M_PI) * sinc(half) * std::cos(half + phase);
}

double analytic_population(const RotatingFrameParams& rf,
                           const PulseSequence& seq, double phase_offset) {
  const double phi = analytic_phi(rf, seq, phase_offset);
  const double s = std::sin(phi - 0.25 * M_PI);
  return s * s;
}

double contrast(const RotatingFrameParams& rf, const PulseSequence& seq,
                int grid_points) {
  if (grid_points < 64) throw std::invalid_argument("contrast: grid_points must be >= 64");
  double p_max = 0.0;
  double p_min = 1.0;
  for (int i = 0; i < grid_points; ++i) {
    const double phase = 2.0 * M_PI * static_cast<double>(i) / grid_points;
    const double p = analytic_population(rf, seq, phase);
    p_max = std::max(p_max, p);
    p_min = std::min(p_min, p);
  }
  const double denom = p_max + p_min;
  return (denom > 0.0) ? (p_max - p_min) / denom : 0.0;
}

int find_saturation_ns(const RotatingFrameParams& rf, double tau,
                       double c_threshold, int ns_max) {
  if (!(c_threshold >= 0.0) || !(c_threshold < 1.0))
    throw std::invalid_argument("find_saturation_ns: c_threshold must be in [0, 1)");
  for (int ns = 1; ns <= ns_max; ++ns) {
    PulseSequence seq{SequenceKind::CPMG, tau, ns, 0.0};
    if (contrast(rf, seq) >= c_threshold) return ns;
  }
  throw std::runtime_error("find_saturation_ns: contrast did not reach threshold within ns_max");
}

SingleRunResult simulate_lab_frame(const SignalField& field, const Sensor& sensor,
                                   const PulseSequence& seq, double phase_offset,
                                   double dt_max, long max_steps) {
  field.validate();
  sensor.validate();
  seq.validate();
  const double fast = field.omega + sensor.omega0;
  if (!(dt_max > 0.0) || dt_max > 2.0 * M_PI / (50.0 * fast))
    throw std::invalid_argument("simulate_lab_frame: dt_max does not resolve omega + omega0");
  const double t_s = seq.duration();
  const double est_steps = t_s / dt_max;
  if (est_steps > static_cast<double>(max_steps))
    throw std::runtime_error("simulate_lab_frame: step budget exceeded");

  const PauliCoeffFn lab = [&](double t) -> std::array<double, 3> {
    const double drive = std::cos(field.omega * t + phase_offset);
    return {field.b[0] * drive, field.b[1] * drive,
            0.5 * sensor.omega0 + field.b[2] * drive};
  };

  QubitState state = QubitState::excited();
  const int n_pulses = seq.total_pulses();
  for (int i = 0; i < n_pulses; ++i) {
    const double t_a = static_cast<double>(i) * seq.tau;
    const double t_b = static_cast<double>(i + 1) * seq.tau;
    state = propagate_piecewise(state, lab, t_a, t_b, dt_max);
    // Ideal pulse defined in the omega0-rotating frame, conjugated back
    // into the lab frame at the pulse time.
    const double z_angle = sensor.omega0 * t_b;
    state = apply_rotation(state, 0.0, 0.0, 1.0, -z_angle);
    state = apply_pulse(state, seq.pulse_axis(i), M_PI);
    state = apply_rotation(state, 0.0, 0.0, 1.0, z_angle);
  }
  // Measure |+> in the rotating frame.
  state = apply_rotation(state, 0.0, 0.0, 1.0, -sensor.omega0 * t_s);
  return {state.p_plus(), t_s};
}

}  // namespace qdyne
