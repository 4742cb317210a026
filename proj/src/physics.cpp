#include "qdyne/physics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qdyne {

void SignalField::validate() const {
  if (!(omega > 0.0)) throw std::invalid_argument("SignalField: omega must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("SignalField: gamma must be >= 0");
  for (double bi : b) {
    if (!std::isfinite(bi))
      throw std::invalid_argument("SignalField: coupling vector must be finite");
  }
}

void Sensor::validate() const {
  if (!(omega0 > 0.0)) throw std::invalid_argument("Sensor: omega0 must be > 0");
}

RotatingFrameParams derive_rotating_frame(const SignalField& field,
                                          const Sensor& sensor) {
  field.validate();
  sensor.validate();
  RotatingFrameParams rf;
  rf.delta = field.omega - sensor.omega0;
  rf.k_s = std::hypot(field.b[0], field.b[1]);
  // tan(theta) = b_x/b_y, quadrant resolved by the signs of (b_x, b_y)
  rf.theta = (rf.k_s > 0.0) ? std::atan2(field.b[0], field.b[1]) : 0.0;
  rf.phi = field.phi_s + rf.theta;
  return rf;
}

RegimeReport validate_regime(const RotatingFrameParams& rf,
                             const SignalField& field, const Sensor& sensor,
                             double margin) {
  if (!(margin >= 1.0)) throw std::invalid_argument("validate_regime: margin must be >= 1");
  RegimeReport rep;
  const double abs_delta = std::abs(rf.delta);
  const double sum = field.omega + sensor.omega0;
  rep.ratio_lo = (abs_delta > 0.0) ? rf.k_s / abs_delta
                                   : std::numeric_limits<double>::infinity();
  rep.ratio_hi = abs_delta / sum;
  rep.ok = (rf.k_s * margin <= abs_delta) && (abs_delta * margin <= sum) &&
           abs_delta > 0.0;
  return rep;
}

std::array<double, 3> hamiltonian_coeffs_rotating(const RotatingFrameParams& rf,
                                                  double noise_value, double t) {
  const double arg = rf.delta * t + rf.phi;
  return {0.5 * rf.k_s * std::cos(arg), 0.5 * rf.k_s * std::sin(arg),
          0.5 * noise_value};
}

double hamiltonian_coeff_toggling(const RotatingFrameParams& rf, double tau,
                                  double t) {
  if (!(tau > 0.0)) throw std::invalid_argument("hamiltonian_coeff_toggling: tau must be > 0");
  const double delta_small = rf.delta - M_PI / tau;
  return (rf.k_s / M_PI) * std::cos(delta_small * t + rf.phi);
}

}  // namespace qdyne
