#include "qdyne/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace qdyne {

double standard_normal(RngStream& rng) {
  // Box-Muller; u1 in (0, 1] to keep the log finite.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

long poisson_draw(double mu, RngStream& rng) {
  if (!(mu >= 0.0)) throw std::invalid_argument("poisson_draw: mu must be >= 0");
  long total = 0;
  // Split large means into halves; a Poisson sum is exact.
  while (mu > 30.0) {
    const double half = mu / 2.0;
    total += poisson_draw(half, rng);
    mu -= half;
  }
  // Knuth multiplication method for the small-mean remainder.
  const double limit = std::exp(-mu);
  double prod = rng.uniform();
  long k = 0;
  while (prod > limit) {
    ++k;
    prod *= rng.uniform();
  }
  return total + k;
}

}  // namespace qdyne
