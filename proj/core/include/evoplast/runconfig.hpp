#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evoplast/ctgraph.hpp"
#include "evoplast/evolve.hpp"
#include "evoplast/harness.hpp"

namespace evoplast {

struct FeatureConfig {
  int epochs = 30000;
  double learning_rate = 0.001;
  double mse_ceiling = 0.01;  // pretrain fails when final MSE stays above this
  int replicas = 1;
  std::vector<int> layer_sizes = default_layer_sizes();
  std::string artifact;  // where pretrain writes / the other commands read
};

// Whole-run configuration. One global seed fans out to named sub-streams
// (derive_seed(seed, label)): "env-gen" for observation images, "pretrain"
// for autoencoder init, "evolution" for the genetic algorithm, "eval" for
// held-out evaluation and analysis. Explicit environment.obs_seed or
// evolution.rng_seed values in the file override the derived ones.
struct RunConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "out";
  CtGraphConfig environment;
  FeatureConfig features;
  EvolutionConfig evolution;
  TrialConfig harness;

  std::uint64_t pretrain_seed() const;
  std::uint64_t eval_seed() const;
  // The features artifact path, defaulting to <output_dir>/features.json.
  std::string features_path() const;

  void validate() const;
};

RunConfig default_run_config();

// Loads a JSON config; absent keys keep their defaults. The optional
// arguments are command-line overrides applied before seed fan-out.
RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override,
                          std::optional<int> workers_override,
                          std::optional<std::string> output_dir_override);

// Fully resolved configuration (every default made explicit), for run metadata.
std::string run_config_to_json(const RunConfig& config);

}  // namespace evoplast
