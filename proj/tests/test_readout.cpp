#include <cmath>
#include <initializer_list>

#include "doctest.h"
#include "qdyne/readout.hpp"

using namespace qdyne;

namespace {

struct Moments {
  double mean;
  double var;
  long n;
};

Moments sample_moments(double p, const ReadoutModel& model, long n,
                       std::uint64_t seed) {
  RngStream rng(seed, stream_id::kReadout);
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double z = static_cast<double>(sample_photons(p, model, rng));
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  return {mean, sum2 / n - mean * mean, n};
}

}  // namespace

TEST_CASE("count moments, closed form") {
  const auto bern = ReadoutModel::bernoulli();
  CHECK(count_mean(0.3, bern) == doctest::Approx(0.3));
  CHECK(count_variance(0.3, bern) == doctest::Approx(0.21));
  CHECK(count_variance(0.0, bern) == doctest::Approx(0.0));

  // Poisson mixture: law of total variance adds the shot-noise term.
  const auto pois = ReadoutModel::poisson(0.7, 1.0);
  CHECK(count_mean(0.5, pois) == doctest::Approx(0.85));
  CHECK(count_variance(0.5, pois) ==
        doctest::Approx(0.85 + 0.09 * 0.25).epsilon(1e-12));
}

TEST_CASE("Bernoulli sampling matches projection-noise statistics") {
  const double p = 0.3;
  const auto m = sample_moments(p, ReadoutModel::bernoulli(), 400'000, 11);
  const double se_mean = std::sqrt(p * (1 - p) / m.n);
  CHECK(std::abs(m.mean - p) < 3.0 * se_mean);
  CHECK(m.var == doctest::Approx(p * (1 - p)).epsilon(0.02));
}

TEST_CASE("Poisson two-level sampling matches the mixture moments") {
  const auto model = ReadoutModel::poisson(0.7, 1.0);
  const double p = 0.42;
  const auto m = sample_moments(p, model, 400'000, 22);
  const double mu = count_mean(p, model);
  const double var = count_variance(p, model);
  const double se_mean = std::sqrt(var / m.n);
  CHECK(std::abs(m.mean - mu) < 3.0 * se_mean);
  CHECK(m.var == doctest::Approx(var).epsilon(0.02));
}

TEST_CASE("degenerate populations collapse to single Poisson branches") {
  const auto model = ReadoutModel::poisson(0.1, 1.1);
  for (double p : {0.0, 1.0}) {
    const auto m = sample_moments(p, model, 200'000, 33);
    const double mu = (p == 0.0) ? 0.1 : 1.1;
    CHECK(std::abs(m.mean - mu) < 3.0 * std::sqrt(mu / m.n));
    CHECK(m.var == doctest::Approx(mu).epsilon(0.03));
  }
}

TEST_CASE("large-mean Poisson branch keeps its moments") {
  // Exercises the large-mu sampling path.
  const auto model = ReadoutModel::poisson(0.0, 80.0);
  const auto m = sample_moments(1.0, model, 200'000, 44);
  CHECK(std::abs(m.mean - 80.0) < 3.0 * std::sqrt(80.0 / m.n));
  CHECK(m.var == doctest::Approx(80.0).epsilon(0.03));
}

TEST_CASE("model validation") {
  CHECK_THROWS(ReadoutModel::poisson(1.0, 1.0).validate());
  CHECK_THROWS(ReadoutModel::poisson(-0.1, 1.0).validate());
  CHECK_NOTHROW(ReadoutModel::poisson(0.0, 0.5).validate());
  RngStream rng(0, 0);
  CHECK_THROWS(sample_photons(-0.1, ReadoutModel::bernoulli(), rng));
  CHECK_THROWS(sample_photons(1.1, ReadoutModel::bernoulli(), rng));
}
