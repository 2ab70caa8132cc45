// Command-line front end: pretrain the feature extractor, evolve controllers,
// evaluate genomes and run the network introspection reports.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "evoplast/analysis.hpp"
#include "evoplast/csv.hpp"
#include "evoplast/ctgraph.hpp"
#include "evoplast/evolve.hpp"
#include "evoplast/features.hpp"
#include "evoplast/harness.hpp"
#include "evoplast/neuromod.hpp"
#include "evoplast/rng.hpp"
#include "evoplast/runconfig.hpp"

namespace {

using namespace evoplast;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void write_metadata(const RunConfig& config, const std::string& command) {
  ensure_directory(config.output_dir);
  // Resolved config (all defaults explicit) so a run can be reproduced.
  std::string body = run_config_to_json(config);
  body.insert(body.find('{') + 1, "\n  \"command\": \"" + command + "\",");
  write_text_file(join(config.output_dir, "run_metadata.json"), body);
}

int cmd_pretrain(const RunConfig& config) {
  write_metadata(config, "pretrain");
  const CtGraph env(config.environment);
  write_observations_csv(env, join(config.output_dir, "observations.csv"));

  const auto dataset = collect_observations(env, config.features.replicas);
  const TrainResult trained =
      train_autoencoder(dataset, config.features.learning_rate, config.features.epochs,
                        config.pretrain_seed(), config.features.layer_sizes);

  std::vector<std::vector<double>> latents;
  latents.reserve(dataset.size());
  for (const auto& obs : dataset)
    latents.push_back(encode(trained.params, obs.pixels));

  FeaturePipeline pipeline{trained.params, fit_scaler(latents)};
  const std::string path = config.features_path();
  ensure_directory(fs::path(path).parent_path().string());
  save_features(pipeline, path);

  std::printf("final_mse %.10g\n", trained.final_loss);
  std::printf("features written to %s\n", path.c_str());
  if (trained.final_loss > config.features.mse_ceiling) {
    std::fprintf(stderr, "error: autoencoder did not converge: final MSE %.10g > ceiling %.10g\n",
                 trained.final_loss, config.features.mse_ceiling);
    return kExitRuntime;
  }
  return kExitOk;
}

FeaturePipeline load_features_or_fail(const RunConfig& config) {
  const std::string path = config.features_path();
  if (!fs::exists(path))
    throw std::invalid_argument("features artifact not found: " + path +
                                " (run `evoplast pretrain` first)");
  return load_features(path);
}

int cmd_evolve(const RunConfig& config, const std::string& resume_path) {
  write_metadata(config, "evolve");
  const CtGraph env(config.environment);
  const FeaturePipeline features = load_features_or_fail(config);

  std::unique_ptr<Checkpoint> resume;
  if (!resume_path.empty()) resume = std::make_unique<Checkpoint>(load_checkpoint(resume_path));

  CsvWriter log_csv(join(config.output_dir, "generation_log.csv"));
  log_csv.write_row({"generation", "best_fitness", "mean_fitness", "std_fitness",
                     "best_genome_id"});

  const int interval = config.evolution.checkpoint_interval;
  GenerationHook hook = [&](const GenerationView& view) {
    log_csv.write_row({std::to_string(view.stats.generation),
                       format_double(view.stats.best_fitness),
                       format_double(view.stats.mean_fitness),
                       format_double(view.stats.std_fitness),
                       std::to_string(view.stats.best_genome_id)});
    log_csv.flush();
    std::printf("generation %d best %.4f mean %.4f\n", view.stats.generation,
                view.stats.best_fitness, view.stats.mean_fitness);
    std::fflush(stdout);

    if (interval > 0 && (view.stats.generation + 1) % interval == 0) {
      Checkpoint checkpoint{view.stats.generation, view.population, view.best_genome,
                            view.best_fitness, view.best_id};
      save_checkpoint(checkpoint, join(config.output_dir,
                                       "checkpoint_gen" +
                                           std::to_string(view.stats.generation) + ".json"));
      save_genome(view.best_genome, join(config.output_dir, "best_genome.json"));
    }
    return true;
  };

  const EvolutionResult result = run_evolution(config.evolution, env, features,
                                               config.harness, hook, resume.get());
  save_genome(result.best_genome, join(config.output_dir, "best_genome.json"));
  std::printf("best_fitness %.10g (genome id %llu)\n", result.best_fitness,
              static_cast<unsigned long long>(result.best_id));
  std::printf("best genome written to %s\n",
              join(config.output_dir, "best_genome.json").c_str());
  return kExitOk;
}

int cmd_evaluate(const RunConfig& config, const std::string& genome_path, bool oracle) {
  write_metadata(config, "evaluate");
  const CtGraph env(config.environment);

  std::unique_ptr<FeaturePipeline> features;
  std::unique_ptr<Controller> controller;
  if (oracle) {
    controller = std::make_unique<OracleReplayController>(env);
  } else {
    if (genome_path.empty())
      throw std::invalid_argument("evaluate needs --genome (or --oracle)");
    const Genome genome = load_genome(genome_path);
    features = std::make_unique<FeaturePipeline>(load_features_or_fail(config));
    controller = std::make_unique<PlasticNetController>(genome, *features);
  }

  std::vector<TrialResult> trials;
  double total = 0.0;
  for (int trial = 0; trial < config.harness.trials_per_eval; ++trial) {
    Rng rng(derive_seed(config.eval_seed(), static_cast<std::uint64_t>(trial)));
    trials.push_back(run_trial(env, config.harness, *controller, rng));
    total += trials.back().trial_reward;
  }

  write_episodes_csv(trials, join(config.output_dir, "episodes.csv"));
  write_steps_csv(trials, join(config.output_dir, "steps.csv"));

  const double per_episode =
      total / (static_cast<double>(config.harness.trials_per_eval) *
               config.harness.episodes_per_trial);
  std::printf("mean_per_episode_reward %.10g\n", per_episode);
  std::printf("mean_trial_reward %.10g\n",
              total / config.harness.trials_per_eval);
  return kExitOk;
}

int cmd_analyze(const RunConfig& config, const std::string& genome_path, int n_trials) {
  write_metadata(config, "analyze");
  const CtGraph env(config.environment);
  const Genome genome = load_genome(genome_path);
  const FeaturePipeline features = load_features_or_fail(config);

  const int trials = n_trials > 0 ? n_trials : config.harness.trials_per_eval;
  Rng rng(derive_seed(config.eval_seed(), "analysis"));
  const ActivationDataset dataset =
      collect_dataset(genome, env, config.harness, features, trials, rng);

  const LocationStats location = location_stats(dataset);
  const RewardCueStats cue = reward_cue_stats(dataset);
  export_report(location, cue, config.output_dir);
  std::printf("reports written to %s (location_stats.csv, reward_cue_stats.csv, stats_long.csv)\n",
              config.output_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neuroevolution of plastic neuromodulated controllers on a tree-graph POMDP"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "global seed override");
  app.add_option("--workers", workers, "parallel fitness workers");
  app.add_option("--out", out_dir, "output directory override");

  auto* pretrain = app.add_subcommand("pretrain", "train and save the feature extractor");
  auto* evolve = app.add_subcommand("evolve", "run the genetic algorithm");
  std::string resume_path;
  evolve->add_option("--resume", resume_path, "continue from a population checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "score a genome over evaluation trials");
  std::string eval_genome;
  bool oracle = false;
  evaluate->add_option("--genome", eval_genome, "genome file to evaluate");
  evaluate->add_flag("--oracle", oracle, "evaluate the oracle-replay fixture instead");
  auto* analyze = app.add_subcommand("analyze", "activation reports for a genome");
  std::string analyze_genome;
  int analyze_trials = 0;
  analyze->add_option("--genome", analyze_genome, "genome file to analyze")->required();
  analyze->add_option("--trials", analyze_trials, "trials to record (default: trials_per_eval)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig config = load_run_config(config_path, seed, workers, out_dir);
    if (pretrain->parsed()) return cmd_pretrain(config);
    if (evolve->parsed()) return cmd_evolve(config, resume_path);
    if (evaluate->parsed()) return cmd_evaluate(config, eval_genome, oracle);
    if (analyze->parsed()) return cmd_analyze(config, analyze_genome, analyze_trials);
    std::fprintf(stderr, "error: no subcommand\n");
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
