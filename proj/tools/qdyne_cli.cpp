#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "qdyne/experiment.hpp"

namespace {

qdyne::ExperimentConfig load_config(const std::string& spec) {
  // A known preset name wins; anything else is treated as a config path.
  try {
    return qdyne::preset(spec);
  } catch (const std::invalid_argument&) {
  }
  std::ifstream is(spec);
  if (!is) throw std::runtime_error("no such preset or config file: " + spec);
  std::stringstream buf;
  buf << is.rdbuf();
  return qdyne::ExperimentConfig::from_json(buf.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Qdyne frequency-measurement simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a preset or config-file experiment");
  std::string spec;
  std::string out_dir = "out";
  std::string mode;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int realizations = 0;
  run->add_option("experiment", spec, "preset name (fig2a, fig2b, fig2c, fig3, fig4) or config path")
      ->required();
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  run->add_option("--mode", mode, "chain mode override: numeric or analytic")
      ->check(CLI::IsMember({"numeric", "analytic"}));
  run->add_option("--seed", seed, "RNG seed override")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--realizations", realizations, "ensemble size override")
      ->check(CLI::PositiveNumber);

  auto* show = app.add_subcommand("show-config", "print a preset configuration as JSON");
  std::string preset_name;
  show->add_option("preset", preset_name, "preset name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (show->parsed()) {
      std::cout << qdyne::preset(preset_name).to_json() << "\n";
      return 0;
    }
    qdyne::ExperimentConfig config = load_config(spec);
    if (seed_set) {
      config.seed = seed;
      config.chain.seed = seed;
    }
    if (!mode.empty())
      config.chain.mode = (mode == "numeric") ? qdyne::ChainMode::NumericEq1
                                              : qdyne::ChainMode::AnalyticEq3;
    if (realizations > 0) config.realizations = realizations;
    return qdyne::run_experiment(config, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
