#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "evoplast/harness.hpp"
#include "evoplast/neuromod.hpp"

namespace evoplast {

struct MutationRates {
  double weight_perturb_prob = 0.8;  // one draw per genome; perturbs every weight
  double weight_sigma = 0.1;
  double add_connection_prob = 0.1;
  double del_connection_prob = 0.05;
  double add_neuron_prob = 0.03;
  double del_neuron_prob = 0.01;
  double flip_kind_prob = 0.02;
  double rule_perturb_prob = 0.2;
  double rule_sigma = 0.1;

  void validate() const;
};

struct EvolutionConfig {
  int population_size = 150;
  int generations = 100;
  int tournament_segment = 5;
  double elite_fraction = 0.05;
  MutationRates rates;
  std::uint64_t rng_seed = 0;
  int workers = 1;
  int checkpoint_interval = 25;
  // New evaluation seeds every generation (shared by the whole population).
  // With false, the same seeds are reused each generation, which makes
  // best-so-far fitness monotone under elitism.
  bool reseed_each_generation = true;
  // Stop once best training fitness reaches this value. NaN disables.
  double target_fitness = std::numeric_limits<double>::quiet_NaN();

  void validate() const;
};

struct Individual {
  Genome genome;
  double fitness = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t id = 0;  // creation index igen*N + slot; ties break toward lower id

  bool evaluated() const { return !std::isnan(fitness); }
};

struct GenerationStats {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double std_fitness = 0.0;
  std::uint64_t best_genome_id = 0;
};

struct EvolutionResult {
  Genome best_genome;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::uint64_t best_id = 0;
  std::vector<GenerationStats> log;
};

// Evaluated population snapshot; enough to continue a run exactly because all
// later randomness is derived from (rng_seed, generation, slot) counters.
struct Checkpoint {
  int generation = 0;
  std::vector<Individual> population;
  Genome best_genome;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::uint64_t best_id = 0;
};

// Minimal seed topology: inputs fully connected to one standard and one
// modulatory hidden neuron, both wired to the single standard output.
Genome make_seed_genome(std::uint32_t num_inputs, Rng& rng);

// Uniform segment without replacement; winner is the best fitness with ties
// broken toward the lower individual id. Requires an evaluated population at
// least as large as the segment.
std::size_t tournament_select(const std::vector<Individual>& population, int segment_size,
                              Rng& rng);

// Applies, each behind its own probability: weight perturbation, connection
// add/delete, neuron add/delete, kind flip (never the output), and rule
// coefficient perturbation. The result always satisfies the genome invariants.
Genome mutate(const Genome& genome, const MutationRates& rates, Rng& rng);

// Elites copied unchanged, the rest bred by tournament + mutation. Randomness
// is derived per (generation, slot), never carried across calls.
std::vector<Individual> next_generation(const std::vector<Individual>& population,
                                        const EvolutionConfig& config, int generation);

struct GenerationView {
  const GenerationStats& stats;
  const std::vector<Individual>& population;
  const Genome& best_genome;
  double best_fitness;
  std::uint64_t best_id;
};

// Return false to stop after the current generation.
using GenerationHook = std::function<bool(const GenerationView&)>;

EvolutionResult run_evolution(const EvolutionConfig& config, const CtGraph& env,
                              const FeaturePipeline& features, const TrialConfig& trial_config,
                              const GenerationHook& hook = {},
                              const Checkpoint* resume = nullptr);

// Evaluation seed shared by all individuals of one generation.
std::uint64_t generation_eval_seed(const EvolutionConfig& config, int generation);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void write_generation_log_csv(const std::vector<GenerationStats>& log,
                              const std::string& path);

}  // namespace evoplast
