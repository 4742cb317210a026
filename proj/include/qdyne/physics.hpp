#pragma once

#include <array>

namespace qdyne {

/// Lab-frame parameters of the oscillating target field
/// H_s = (b . sigma) cos(omega t + phi_s).
struct SignalField {
  double omega = 0.0;   // angular frequency [rad/s], > 0
  double phi_s = 0.0;   // initial phase [rad]
  std::array<double, 3> b{0.0, 0.0, 0.0};  // coupling strengths [rad/s]
  double gamma = 0.0;   // intrinsic linewidth (FWHM) [rad/s], >= 0

  void validate() const;
};

/// Two-level sensor with splitting omega0, H_p = (omega0/2) sigma_z.
struct Sensor {
  double omega0 = 0.0;  // [rad/s], > 0

  void validate() const;
};

/// Parameters of the effective RF signal seen in the frame rotating at
/// the sensor splitting:
///   H = (k_s/2)[cos(Delta t + phi) sigma_x + sin(Delta t + phi) sigma_y].
struct RotatingFrameParams {
  double delta = 0.0;  // detuning omega - omega0 [rad/s]
  double k_s = 0.0;    // transverse coupling sqrt(b_x^2 + b_y^2) [rad/s]
  double theta = 0.0;  // coupling phase, tan(theta) = b_x/b_y [rad]
  double phi = 0.0;    // effective initial phase phi_s + theta [rad]
};

/// Outcome of checking k_s << |Delta| << omega + omega0.
struct RegimeReport {
  double ratio_lo = 0.0;  // k_s / |Delta|
  double ratio_hi = 0.0;  // |Delta| / (omega + omega0)
  bool ok = false;
};

RotatingFrameParams derive_rotating_frame(const SignalField& field,
                                          const Sensor& sensor);

/// Both separations must hold by at least `margin` (default one order of
/// magnitude per inequality). Delta == 0 reports an infinite low ratio.
RegimeReport validate_regime(const RotatingFrameParams& rf,
                             const SignalField& field, const Sensor& sensor,
                             double margin = 10.0);

/// Pauli coefficients (h_x, h_y, h_z) of the rotating-frame Hamiltonian
/// H = h_x sigma_x + h_y sigma_y + h_z sigma_z at time t, including a
/// dephasing contribution h_z = noise_value/2.
std::array<double, 3> hamiltonian_coeffs_rotating(const RotatingFrameParams& rf,
                                                  double noise_value, double t);

/// sigma_y coefficient (k_s/pi) cos(delta t + phi) of the toggling-frame
/// average Hamiltonian for CPMG spacing tau, with delta = Delta - pi/tau.
double hamiltonian_coeff_toggling(const RotatingFrameParams& rf, double tau,
                                  double t);

}  // namespace qdyne
