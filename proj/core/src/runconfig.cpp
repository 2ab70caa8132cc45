#include "evoplast/runconfig.hpp"

#include <filesystem>
#include <stdexcept>

#include "json.hpp"

#include "evoplast/csv.hpp"
#include "evoplast/rng.hpp"

namespace evoplast {

namespace {

constexpr int kRunConfigSchemaVersion = 1;

template <typename T>
void read_into(const nlohmann::json& doc, const char* key, T& target) {
  if (doc.contains(key)) target = doc.at(key).get<T>();
}

}  // namespace

std::uint64_t RunConfig::pretrain_seed() const { return derive_seed(seed, "pretrain"); }

std::uint64_t RunConfig::eval_seed() const { return derive_seed(seed, "eval"); }

std::string RunConfig::features_path() const {
  if (!features.artifact.empty()) return features.artifact;
  return (std::filesystem::path(output_dir) / "features.json").string();
}

void RunConfig::validate() const {
  environment.validate();
  evolution.validate();
  harness.validate();
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (features.epochs < 0) throw std::invalid_argument("features.epochs must be >= 0");
  if (features.learning_rate <= 0.0)
    throw std::invalid_argument("features.learning_rate must be > 0");
  if (features.mse_ceiling <= 0.0)
    throw std::invalid_argument("features.mse_ceiling must be > 0");
  if (features.replicas < 1) throw std::invalid_argument("features.replicas must be >= 1");
  if (features.layer_sizes.empty() ||
      features.layer_sizes.front() != environment.obs_side * environment.obs_side)
    throw std::invalid_argument("autoencoder input width must equal obs_side^2");
}

RunConfig default_run_config() {
  RunConfig config;
  config.environment.obs_seed = derive_seed(config.seed, "env-gen");
  config.evolution.rng_seed = derive_seed(config.seed, "evolution");
  config.evolution.workers = config.workers;
  return config;
}

RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override,
                          std::optional<int> workers_override,
                          std::optional<std::string> output_dir_override) {
  nlohmann::json doc = nlohmann::json::object();
  if (!path.empty()) {
    try {
      doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("cannot parse config " + path + ": " + e.what());
    }
    if (doc.contains("version") && doc.at("version").get<int>() != kRunConfigSchemaVersion)
      throw std::invalid_argument("unsupported config schema version in " + path);
  }

  RunConfig config;
  try {
    read_into(doc, "seed", config.seed);
    read_into(doc, "workers", config.workers);
    read_into(doc, "output_dir", config.output_dir);
    if (seed_override) config.seed = *seed_override;
    if (workers_override) config.workers = *workers_override;
    if (output_dir_override) config.output_dir = *output_dir_override;

    bool obs_seed_given = false;
    if (doc.contains("environment")) {
      const auto& env = doc.at("environment");
      read_into(env, "branching_factor", config.environment.branching_factor);
      read_into(env, "depth", config.environment.depth);
      read_into(env, "obs_side", config.environment.obs_side);
      read_into(env, "goal_reward", config.environment.goal_reward);
      read_into(env, "crash_reward", config.environment.crash_reward);
      read_into(env, "step_reward", config.environment.step_reward);
      read_into(env, "wait_delay", config.environment.wait_delay);
      obs_seed_given = env.contains("obs_seed");
      read_into(env, "obs_seed", config.environment.obs_seed);
    }
    if (!obs_seed_given) config.environment.obs_seed = derive_seed(config.seed, "env-gen");

    const int pixels = config.environment.obs_side * config.environment.obs_side;
    config.features.layer_sizes = {pixels, 64, 16, 64, pixels};
    if (doc.contains("features")) {
      const auto& feats = doc.at("features");
      read_into(feats, "epochs", config.features.epochs);
      read_into(feats, "learning_rate", config.features.learning_rate);
      read_into(feats, "mse_ceiling", config.features.mse_ceiling);
      read_into(feats, "replicas", config.features.replicas);
      read_into(feats, "layer_sizes", config.features.layer_sizes);
      read_into(feats, "artifact", config.features.artifact);
    }

    bool rng_seed_given = false;
    if (doc.contains("evolution")) {
      const auto& evo = doc.at("evolution");
      read_into(evo, "population_size", config.evolution.population_size);
      read_into(evo, "generations", config.evolution.generations);
      read_into(evo, "tournament_segment", config.evolution.tournament_segment);
      read_into(evo, "elite_fraction", config.evolution.elite_fraction);
      read_into(evo, "checkpoint_interval", config.evolution.checkpoint_interval);
      read_into(evo, "reseed_each_generation", config.evolution.reseed_each_generation);
      read_into(evo, "target_fitness", config.evolution.target_fitness);
      rng_seed_given = evo.contains("rng_seed");
      read_into(evo, "rng_seed", config.evolution.rng_seed);
      if (evo.contains("rates")) {
        const auto& rates = evo.at("rates");
        read_into(rates, "weight_perturb_prob", config.evolution.rates.weight_perturb_prob);
        read_into(rates, "weight_sigma", config.evolution.rates.weight_sigma);
        read_into(rates, "add_connection_prob", config.evolution.rates.add_connection_prob);
        read_into(rates, "del_connection_prob", config.evolution.rates.del_connection_prob);
        read_into(rates, "add_neuron_prob", config.evolution.rates.add_neuron_prob);
        read_into(rates, "del_neuron_prob", config.evolution.rates.del_neuron_prob);
        read_into(rates, "flip_kind_prob", config.evolution.rates.flip_kind_prob);
        read_into(rates, "rule_perturb_prob", config.evolution.rates.rule_perturb_prob);
        read_into(rates, "rule_sigma", config.evolution.rates.rule_sigma);
      }
    }
    if (!rng_seed_given) config.evolution.rng_seed = derive_seed(config.seed, "evolution");
    config.evolution.workers = config.workers;

    if (doc.contains("harness")) {
      const auto& harness = doc.at("harness");
      read_into(harness, "episodes_per_trial", config.harness.episodes_per_trial);
      read_into(harness, "num_tasks", config.harness.num_tasks);
      read_into(harness, "change_lo", config.harness.change_lo);
      read_into(harness, "change_hi", config.harness.change_hi);
      read_into(harness, "trials_per_eval", config.harness.trials_per_eval);
      read_into(harness, "max_steps_per_episode", config.harness.max_steps_per_episode);
      read_into(harness, "record_activations", config.harness.record_activations);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed config " + path + ": " + e.what());
  }

  config.validate();
  return config;
}

std::string run_config_to_json(const RunConfig& config) {
  nlohmann::json doc;
  doc["version"] = kRunConfigSchemaVersion;
  doc["seed"] = config.seed;
  doc["workers"] = config.workers;
  doc["output_dir"] = config.output_dir;
  doc["environment"] = {
      {"branching_factor", config.environment.branching_factor},
      {"depth", config.environment.depth},
      {"obs_side", config.environment.obs_side},
      {"goal_reward", config.environment.goal_reward},
      {"crash_reward", config.environment.crash_reward},
      {"step_reward", config.environment.step_reward},
      {"wait_delay", config.environment.wait_delay},
      {"obs_seed", config.environment.obs_seed},
  };
  doc["features"] = {
      {"epochs", config.features.epochs},
      {"learning_rate", config.features.learning_rate},
      {"mse_ceiling", config.features.mse_ceiling},
      {"replicas", config.features.replicas},
      {"layer_sizes", config.features.layer_sizes},
      {"artifact", config.features.artifact},
  };
  doc["evolution"] = {
      {"population_size", config.evolution.population_size},
      {"generations", config.evolution.generations},
      {"tournament_segment", config.evolution.tournament_segment},
      {"elite_fraction", config.evolution.elite_fraction},
      {"rng_seed", config.evolution.rng_seed},
      {"checkpoint_interval", config.evolution.checkpoint_interval},
      {"reseed_each_generation", config.evolution.reseed_each_generation},
      {"rates",
       {
           {"weight_perturb_prob", config.evolution.rates.weight_perturb_prob},
           {"weight_sigma", config.evolution.rates.weight_sigma},
           {"add_connection_prob", config.evolution.rates.add_connection_prob},
           {"del_connection_prob", config.evolution.rates.del_connection_prob},
           {"add_neuron_prob", config.evolution.rates.add_neuron_prob},
           {"del_neuron_prob", config.evolution.rates.del_neuron_prob},
           {"flip_kind_prob", config.evolution.rates.flip_kind_prob},
           {"rule_perturb_prob", config.evolution.rates.rule_perturb_prob},
           {"rule_sigma", config.evolution.rates.rule_sigma},
       }},
  };
  if (!std::isnan(config.evolution.target_fitness))
    doc["evolution"]["target_fitness"] = config.evolution.target_fitness;
  doc["harness"] = {
      {"episodes_per_trial", config.harness.episodes_per_trial},
      {"num_tasks", config.harness.num_tasks},
      {"change_lo", config.harness.change_lo},
      {"change_hi", config.harness.change_hi},
      {"trials_per_eval", config.harness.trials_per_eval},
      {"max_steps_per_episode", config.harness.max_steps_per_episode},
      {"record_activations", config.harness.record_activations},
  };
  return doc.dump(2) + "\n";
}

}  // namespace evoplast
