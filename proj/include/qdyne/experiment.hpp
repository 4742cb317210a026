#pragma once

#include <cstdint>
#include <string>

#include "qdyne/chain.hpp"
#include "qdyne/dynamics.hpp"
#include "qdyne/ou.hpp"
#include "qdyne/physics.hpp"
#include "qdyne/readout.hpp"

namespace qdyne {

inline constexpr int kConfigSchemaVersion = 1;

/// Which analysis pipeline run() executes for a configuration.
enum class AnalysisKind {
  PopulationSweep,   // P(N_s) at fixed phase: numeric, analytic, noisy ensembles
  PhaseScan,         // P(phi) over a phase grid, analytic vs one noisy numeric run
  ContrastCurve,     // C(N_s) and the saturation point
  SpectralScaling,   // ensemble power laws of the peak statistic
  ChainSpectroscopy, // full chain -> spectrum -> fit -> frequency estimate
};

/// Full parameter tree for one experiment run. Serializes to a single
/// versioned JSON document; unknown keys are rejected on load.
struct ExperimentConfig {
  std::string name = "custom";
  AnalysisKind analysis = AnalysisKind::ChainSpectroscopy;

  SignalField field;
  Sensor sensor;
  PulseSequence seq;
  bool noise_enabled = false;
  OuParams noise;
  ReadoutModel readout = ReadoutModel::bernoulli();
  ChainConfig chain;

  // analysis options
  int ns_max = 40;            // sweep range for population/contrast curves
  double c_threshold = 0.95;  // saturation threshold
  int phase_points = 32;      // phase-scan grid size
  int realizations = 500;     // ensemble size for averaged curves / scaling
  std::vector<long> n_values; // chain lengths for scaling studies
  long guard_bins = 3;
  long half_window = 10;
  double prior_offset = 0.0;  // added to the true omega to form the prior [rad/s]

  std::uint64_t seed = 1;

  void validate() const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
};

/// Named parameter sets: fig2a, fig2b, fig2c, fig3, fig4.
ExperimentConfig preset(const std::string& name);

/// Execute the configured pipeline, writing CSV/JSON artifacts into
/// out_dir (created if missing) and a one-line summary to stdout.
/// Returns the process exit status.
int run_experiment(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace qdyne
