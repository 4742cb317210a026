#pragma once

#include "qdyne/rng.hpp"

namespace qdyne {

/// Ornstein-Uhlenbeck dephasing process deltaB(t) with exponential
/// autocorrelation delta_B^2 exp(-|dt|/tau_B).
struct OuParams {
  double tau_B = 1.0;    // correlation time [s], > 0
  double delta_B = 0.0;  // stationary standard deviation [rad/s], >= 0

  void validate() const;
};

struct OuState {
  double value = 0.0;  // current deltaB [rad/s]
  double time = 0.0;   // process time [s]
};

/// Draw the initial value from the stationary law N(0, delta_B^2).
OuState ou_init(const OuParams& params, RngStream& rng);

/// Exact discrete update over an arbitrary interval dt >= 0:
///   value' = value e^{-dt/tau_B} + delta_B sqrt(1 - e^{-2 dt/tau_B}) xi.
/// Exactness makes the same call usable for fine integration steps and
/// for skip-ahead over readout/delay dead time.
OuState ou_advance(const OuState& state, const OuParams& params, double dt,
                   RngStream& rng);

}  // namespace qdyne
