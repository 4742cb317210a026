#include "qdyne/ou.hpp"

#include <cmath>
#include <stdexcept>

namespace qdyne {

void OuParams::validate() const {
  if (!(tau_B > 0.0)) throw std::invalid_argument("OuParams: tau_B must be > 0");
  if (!(delta_B >= 0.0)) throw std::invalid_argument("OuParams: delta_B must be >= 0");
}

OuState ou_init(const OuParams& params, RngStream& rng) {
  params.validate();
  OuState state;
  state.value = (params.delta_B > 0.0) ? params.delta_B * standard_normal(rng) : 0.0;
  state.time = 0.0;
  return state;
}

OuState ou_advance(const OuState& state, const OuParams& params, double dt,
                   RngStream& rng) {
  params.validate();
  if (!(dt >= 0.0)) throw std::invalid_argument("ou_advance: dt must be >= 0");
  const double decay = std::exp(-dt / params.tau_B);
  const double sigma = params.delta_B * std::sqrt(-std::expm1(-2.0 * dt / params.tau_B));
  OuState next;
  next.value = state.value * decay +
               ((sigma > 0.0) ? sigma * standard_normal(rng) : 0.0);
  next.time = state.time + dt;
  return next;
}

}  // namespace qdyne
