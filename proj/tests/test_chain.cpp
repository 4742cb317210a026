#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qdyne/chain.hpp"

using namespace qdyne;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Fig.-4 style chain: 9 CPMG units of tau = 0.5 us, 1 us readout, 90 us
// delay, so f_L = 10 kHz and the 1801501232 Hz signal aliases to 1232 Hz.
struct Bench {
  SignalField field{kTwoPi * 1801501232.0, 0.0, {0.0, kTwoPi * 50e3, 0.0}, 0.0};
  Sensor sensor{kTwoPi * 1800501000.0};
  RotatingFrameParams rf = derive_rotating_frame(field, sensor);
  PulseSequence seq{SequenceKind::CPMG, 0.5e-6, 9, 0.0};
  ChainConfig cfg{9e-6, 1e-6, 90e-6, 400, ChainMode::AnalyticEq3, 7};
};

}  // namespace

TEST_CASE("alias decomposition of the sampling comb") {
  // Tolerances here are set by the representation of omega itself: one
  // ulp at 1.1e10 rad/s is ~2e-6, which survives the alias subtraction.
  const auto red = reduce_frequency(kTwoPi * 1801501232.0, 1e4);
  CHECK(red.n_l == 180150);
  CHECK(red.delta_l / kTwoPi == doctest::Approx(1232.0).epsilon(1e-9));

  // A signal below the midpoint wraps to a negative alias.
  const auto neg = reduce_frequency(kTwoPi * (7e4 - 2500.0), 1e4);
  CHECK(neg.n_l == 7);
  CHECK(neg.delta_l / kTwoPi == doctest::Approx(-2500.0).epsilon(1e-12));

  // Exactly half a bin ties toward +pi f_L.
  const auto tie = reduce_frequency(kTwoPi * 3.5e4, 1e4);
  CHECK(tie.n_l == 3);
  CHECK(tie.delta_l / kTwoPi == doctest::Approx(5000.0).epsilon(1e-12));

  CHECK_THROWS(reduce_frequency(1.0, 0.0));
}

TEST_CASE("chain phases follow the reduced frequency") {
  Bench b;
  std::vector<double> pops;
  run_chain(b.cfg, b.rf, b.field, b.seq, nullptr, ReadoutModel::bernoulli(),
            &pops);
  const auto red = reduce_frequency(b.field.omega, b.cfg.f_l());
  REQUIRE(pops.size() == 400);
  // The comparison floor is the phase resolution of omega in double
  // precision: ulp(omega) * t_n ~ 1e-7 rad by the end of the chain.
  for (long n = 1; n <= 400; n += 13) {
    const double phi_n = red.delta_l * (n - 1) * b.cfg.t_l() + b.rf.phi;
    CHECK(std::abs(pops[n - 1] - analytic_population(b.rf, b.seq, phi_n)) < 5e-7);
  }
}

TEST_CASE("aliased signals are indistinguishable at the sampling comb") {
  Bench b;
  std::vector<double> pops_a, pops_b;
  const TimeTrace ta =
      run_chain(b.cfg, b.rf, b.field, b.seq, nullptr, ReadoutModel::bernoulli(), &pops_a);
  SignalField shifted = b.field;
  shifted.omega += kTwoPi * b.cfg.f_l();  // one full alias order up
  const TimeTrace tb =
      run_chain(b.cfg, b.rf, shifted, b.seq, nullptr, ReadoutModel::bernoulli(), &pops_b);
  // Same phase-resolution floor as above.
  for (size_t i = 0; i < pops_a.size(); ++i)
    CHECK(std::abs(pops_a[i] - pops_b[i]) < 5e-7);
  CHECK(ta.counts == tb.counts);
}

TEST_CASE("numeric chain tracks the analytic one without noise") {
  Bench b;
  b.cfg.n_runs = 150;
  std::vector<double> pops_num, pops_ana;
  ChainConfig numeric = b.cfg;
  numeric.mode = ChainMode::NumericEq1;
  run_chain(numeric, b.rf, b.field, b.seq, nullptr, ReadoutModel::bernoulli(),
            &pops_num);
  run_chain(b.cfg, b.rf, b.field, b.seq, nullptr, ReadoutModel::bernoulli(),
            &pops_ana);
  double max_gap = 0.0;
  for (size_t i = 0; i < pops_num.size(); ++i)
    max_gap = std::max(max_gap, std::abs(pops_num[i] - pops_ana[i]));
  CHECK(max_gap < 0.02);
}

TEST_CASE("noisy numeric runs stay physical and use the noise") {
  Bench b;
  b.cfg.n_runs = 40;
  b.cfg.mode = ChainMode::NumericEq1;
  const OuParams ou{4e-3, kTwoPi * 1e5};
  std::vector<double> pops_noisy, pops_clean;
  run_chain(b.cfg, b.rf, b.field, b.seq, &ou, ReadoutModel::bernoulli(), &pops_noisy);
  run_chain(b.cfg, b.rf, b.field, b.seq, nullptr, ReadoutModel::bernoulli(), &pops_clean);
  double diff = 0.0;
  for (size_t i = 0; i < pops_noisy.size(); ++i) {
    CHECK(pops_noisy[i] >= 0.0);
    CHECK(pops_noisy[i] <= 1.0);
    diff = std::max(diff, std::abs(pops_noisy[i] - pops_clean[i]));
  }
  CHECK(diff > 0.0);    // the trajectory actually perturbs the runs
  CHECK(diff < 0.3);    // ... but CPMG keeps the kick small
}

TEST_CASE("field-phase diffusion only engages for gamma > 0") {
  Bench b;
  b.cfg.n_runs = 100;
  std::vector<double> base, again, diffused;
  run_chain(b.cfg, b.rf, b.field, b.seq, nullptr, ReadoutModel::bernoulli(), &base);
  SignalField zero_gamma = b.field;
  zero_gamma.gamma = 0.0;
  run_chain(b.cfg, b.rf, zero_gamma, b.seq, nullptr, ReadoutModel::bernoulli(), &again);
  CHECK(base == again);
  SignalField broad = b.field;
  broad.gamma = 2e4;  // linewidth comparable to the alias offset
  run_chain(b.cfg, b.rf, broad, b.seq, nullptr, ReadoutModel::bernoulli(), &diffused);
  double diff = 0.0;
  for (size_t i = 0; i < base.size(); ++i)
    diff = std::max(diff, std::abs(base[i] - diffused[i]));
  CHECK(diff > 1e-3);
}

TEST_CASE("trace serialization is deterministic") {
  Bench b;
  b.cfg.n_runs = 50;
  const auto model = ReadoutModel::poisson(0.7, 1.0);
  const TimeTrace t1 = run_chain(b.cfg, b.rf, b.field, b.seq, nullptr, model);
  const TimeTrace t2 = run_chain(b.cfg, b.rf, b.field, b.seq, nullptr, model);
  std::ostringstream s1, s2;
  write_trace_csv(t1, s1);
  write_trace_csv(t2, s2);
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().substr(0, 10) == "n,t_n,z_n\n");

  ChainConfig other = b.cfg;
  other.seed = 8;
  const TimeTrace t3 = run_chain(other, b.rf, b.field, b.seq, nullptr, model);
  CHECK(t1.counts != t3.counts);

  const auto meta = nlohmann::json::parse(trace_metadata_json(t1));
  CHECK(meta.at("n_runs") == 50);
  CHECK(meta.at("f_l") == doctest::Approx(1e4));
  CHECK(meta.at("mode") == "analytic");
}

TEST_CASE("configuration validation") {
  Bench b;
  ChainConfig bad = b.cfg;
  bad.t_s = 8e-6;  // does not match the 9 us sequence
  CHECK_THROWS(run_chain(bad, b.rf, b.field, b.seq, nullptr, ReadoutModel::bernoulli()));
  bad = b.cfg;
  bad.n_runs = 0;
  CHECK_THROWS(bad.validate());
  CHECK(b.cfg.t_l() == doctest::Approx(1e-4));
  CHECK(b.cfg.f_l() == doctest::Approx(1e4));
}
