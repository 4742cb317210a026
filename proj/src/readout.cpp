#include "qdyne/readout.hpp"

#include <stdexcept>

namespace qdyne {

void ReadoutModel::validate() const {
  if (variant == Variant::PoissonTwoLevel) {
    if (!(mu0 >= 0.0) || !(mu1 > mu0))
      throw std::invalid_argument("ReadoutModel: requires mu1 > mu0 >= 0");
  }
}

long sample_photons(double p, const ReadoutModel& model, RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("sample_photons: p must be in [0, 1]");
  model.validate();
  const bool branch = rng.uniform() < p;
  if (model.variant == ReadoutModel::Variant::Bernoulli) return branch ? 1 : 0;
  return poisson_draw(branch ? model.mu1 : model.mu0, rng);
}

double count_mean(double p, const ReadoutModel& model) {
  if (model.variant == ReadoutModel::Variant::Bernoulli) return p;
  return model.mu0 + (model.mu1 - model.mu0) * p;
}

double count_variance(double p, const ReadoutModel& model) {
  const double bern = p * (1.0 - p);
  if (model.variant == ReadoutModel::Variant::Bernoulli) return bern;
  const double dmu = model.mu1 - model.mu0;
  return (model.mu0 + dmu * p) + dmu * dmu * bern;
}

}  // namespace qdyne
