#pragma once

#include <complex>
#include <functional>
#include <utility>

#include "qdyne/ou.hpp"
#include "qdyne/physics.hpp"
#include "qdyne/rng.hpp"

namespace qdyne {

/// Pure state of the two-level sensor over the basis {|0>, |1>}.
struct QubitState {
  std::complex<double> c0{0.0, 0.0};
  std::complex<double> c1{0.0, 0.0};

  static QubitState ground() { return {{1.0, 0.0}, {0.0, 0.0}}; }
  static QubitState excited() { return {{0.0, 0.0}, {1.0, 0.0}}; }

  double norm() const { return std::sqrt(std::norm(c0) + std::norm(c1)); }
  /// Population in |+> = (|0> + |1>)/sqrt(2).
  double p_plus() const { return 0.5 * std::norm(c0 + c1); }
};

enum class SequenceKind { CPMG, XY8 };
enum class PulseAxis { X, Y };

/// Decoupling sequence: n_units repetitions of a unit with one pi pulse
/// every tau. CPMG unit = (tau-pi_x-tau-pi_x); XY8 unit = eight pulses
/// with phases X Y X Y Y X Y X at the same spacing.
struct PulseSequence {
  SequenceKind kind = SequenceKind::CPMG;
  double tau = 0.0;          // half-period spacing [s], > 0
  int n_units = 1;           // >= 1
  double pulse_width = 0.0;  // finite pi-pulse duration [s]; 0 = instantaneous

  void validate() const;
  int pulses_per_unit() const { return kind == SequenceKind::CPMG ? 2 : 8; }
  int total_pulses() const { return pulses_per_unit() * n_units; }
  /// Axis of the i-th pulse (0-based) within the sequence.
  PulseAxis pulse_axis(int i) const;
  /// Total interaction time T_s = (pulses per unit) * n_units * tau.
  double duration() const { return total_pulses() * tau; }
};

struct SingleRunResult {
  double p_plus = 0.0;  // population in |+>
  double t_s = 0.0;     // total interaction time [s]
};

/// Coefficient function t -> (h_x, h_y, h_z) with H = h.sigma.
using PauliCoeffFn = std::function<std::array<double, 3>(double)>;

/// Rotation exp(-i angle/2 n.sigma) about the (not necessarily unit)
/// axis; a zero axis is the identity.
QubitState apply_rotation(const QubitState& state, double nx, double ny,
                          double nz, double angle);

/// Instantaneous pi/angle pulse about x or y.
QubitState apply_pulse(const QubitState& state, PulseAxis axis, double angle);

/// Product of exact midpoint-sampled Pauli exponentials over [t0, t1]
/// with sub-interval length <= dt_max. Second-order accurate in dt_max.
QubitState propagate_piecewise(const QubitState& state, const PauliCoeffFn& coeffs,
                               double t0, double t1, double dt_max);

/// Default integration step for rotating-frame runs.
double default_dt_max(const RotatingFrameParams& rf, const PulseSequence& seq);

/// One interaction window: initialize |1>, alternate free evolution under
/// the rotating-frame signal Hamiltonian (phase phi_n = phase_offset) plus
/// sigma_z noise with the decoupling pulses of `seq`, measure |+>.
/// The noise state is advanced through the window and returned; pass
/// ou == nullptr for a noise-free run (ou_state is then ignored).
std::pair<SingleRunResult, OuState> simulate_single_run(
    const RotatingFrameParams& rf, const PulseSequence& seq,
    const OuParams* ou, OuState ou_state, double phase_offset, double dt_max,
    RngStream& rng);

/// Plain free evolution (no decoupling pulses) under the same signal plus
/// noise for `duration`; reference for what the sequence is suppressing.
std::pair<SingleRunResult, OuState> simulate_free_evolution(
    const RotatingFrameParams& rf, double duration, const OuParams* ou,
    OuState ou_state, double phase_offset, double dt_max, RngStream& rng);

/// Closed-form population P = sin^2(Phi - pi/4) with
/// Phi = (k_s T_s / pi) sinc(delta T_s/2) cos(delta T_s/2 + phase_offset),
/// delta = Delta - pi/tau.
double analytic_population(const RotatingFrameParams& rf,
                           const PulseSequence& seq, double phase_offset);

/// Rotation angle Phi itself (used by the Fisher-information module).
double analytic_phi(const RotatingFrameParams& rf, const PulseSequence& seq,
                    double phase_offset);

/// Signal contrast C = (max P - min P)/(max P + min P), extrema over a
/// uniform grid of `grid_points` phases on [0, 2pi).
double contrast(const RotatingFrameParams& rf, const PulseSequence& seq,
                int grid_points = 1024);

/// Smallest N_s <= ns_max whose CPMG contrast reaches c_threshold.
/// Throws if the contrast never reaches the threshold.
int find_saturation_ns(const RotatingFrameParams& rf, double tau,
                       double c_threshold, int ns_max);

/// Full lab-frame evolution under H_p + H_s with pulses applied as ideal
/// rotations in the omega0-rotating frame; the final state is converted
/// to that frame before the |+> projection. Validation oracle for the
/// rotating-wave reduction; intended for reduced carriers and small N_s.
SingleRunResult simulate_lab_frame(const SignalField& field, const Sensor& sensor,
                                   const PulseSequence& seq, double phase_offset,
                                   double dt_max,
                                   long max_steps = 400000000L);

}  // namespace qdyne
