#pragma once

#include "qdyne/rng.hpp"

namespace qdyne {

/// Photon-count map z = M[P]. Bernoulli carries projection noise only;
/// PoissonTwoLevel adds shot noise with state-dependent means:
///   z ~ Pois[mu0 + (mu1 - mu0) Bn[P]].
struct ReadoutModel {
  enum class Variant { Bernoulli, PoissonTwoLevel };

  Variant variant = Variant::Bernoulli;
  double mu0 = 0.0;  // mean photons for the state-0 branch
  double mu1 = 1.0;  // mean photons for the state-1 branch, mu1 > mu0 >= 0

  static ReadoutModel bernoulli() { return {Variant::Bernoulli, 0.0, 1.0}; }
  static ReadoutModel poisson(double mu0, double mu1) {
    return {Variant::PoissonTwoLevel, mu0, mu1};
  }

  void validate() const;
};

long sample_photons(double p, const ReadoutModel& model, RngStream& rng);

/// <z> = mu0 + (mu1 - mu0) p (Bernoulli: p).
double count_mean(double p, const ReadoutModel& model);

/// Bernoulli: p(1-p). Poisson mixture, by the law of total variance:
/// [mu0 + (mu1 - mu0) p] + (mu1 - mu0)^2 p(1-p).
double count_variance(double p, const ReadoutModel& model);

}  // namespace qdyne
