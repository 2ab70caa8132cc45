#include "evoplast/evolve.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "evoplast/csv.hpp"

namespace evoplast {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

void MutationRates::validate() const {
  check_probability(weight_perturb_prob, "weight_perturb_prob");
  check_probability(add_connection_prob, "add_connection_prob");
  check_probability(del_connection_prob, "del_connection_prob");
  check_probability(add_neuron_prob, "add_neuron_prob");
  check_probability(del_neuron_prob, "del_neuron_prob");
  check_probability(flip_kind_prob, "flip_kind_prob");
  check_probability(rule_perturb_prob, "rule_perturb_prob");
  if (weight_sigma < 0.0 || rule_sigma < 0.0)
    throw std::invalid_argument("mutation sigmas must be >= 0");
}

void EvolutionConfig::validate() const {
  if (population_size < 1) throw std::invalid_argument("population_size must be >= 1");
  if (generations < 1) throw std::invalid_argument("generations must be >= 1");
  if (tournament_segment < 1) throw std::invalid_argument("tournament_segment must be >= 1");
  if (population_size < tournament_segment)
    throw std::invalid_argument("population smaller than tournament segment");
  if (!(elite_fraction >= 0.0 && elite_fraction <= 1.0))
    throw std::invalid_argument("elite_fraction must be in [0, 1]");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  rates.validate();
}

Genome make_seed_genome(std::uint32_t num_inputs, Rng& rng) {
  Genome genome;
  genome.num_inputs = num_inputs;
  const std::uint32_t hidden_std = num_inputs;
  const std::uint32_t hidden_mod = num_inputs + 1;
  const std::uint32_t output = num_inputs + 2;
  genome.neurons = {{hidden_std, NeuronKind::Standard},
                    {hidden_mod, NeuronKind::Modulatory},
                    {output, NeuronKind::Standard}};
  genome.output_id = output;

  for (std::uint32_t i = 0; i < num_inputs; ++i) {
    genome.connections.push_back({i, hidden_std, rng.uniform(-1.0, 1.0)});
    genome.connections.push_back({i, hidden_mod, rng.uniform(-1.0, 1.0)});
  }
  genome.connections.push_back({hidden_std, output, rng.uniform(-1.0, 1.0)});
  genome.connections.push_back({hidden_mod, output, rng.uniform(-1.0, 1.0)});

  genome.rule.alpha = rng.uniform(0.0, 1.0);
  genome.rule.a = rng.uniform(-1.0, 1.0);
  genome.rule.b = rng.uniform(-1.0, 1.0);
  genome.rule.c = rng.uniform(-1.0, 1.0);
  genome.rule.d = rng.uniform(-1.0, 1.0);
  return genome;
}

std::size_t tournament_select(const std::vector<Individual>& population, int segment_size,
                              Rng& rng) {
  if (population.empty()) throw std::invalid_argument("tournament on empty population");
  if (segment_size < 1 || static_cast<std::size_t>(segment_size) > population.size())
    throw std::invalid_argument("tournament segment larger than population");

  const auto picks =
      rng.sample_without_replacement(population.size(), static_cast<std::size_t>(segment_size));
  std::size_t winner = picks.front();
  for (const std::size_t i : picks) {
    if (!population[i].evaluated())
      throw std::logic_error("tournament on unevaluated individual");
    if (population[i].fitness > population[winner].fitness ||
        (population[i].fitness == population[winner].fitness &&
         population[i].id < population[winner].id))
      winner = i;
  }
  return winner;
}

Genome mutate(const Genome& genome, const MutationRates& rates, Rng& rng) {
  Genome child = genome;

  if (rng.bernoulli(rates.weight_perturb_prob)) {
    for (auto& conn : child.connections)
      conn.weight = clamp_unit(conn.weight + rng.normal(0.0, rates.weight_sigma));
  }

  if (rng.bernoulli(rates.add_connection_prob)) {
    // Uniform over the free (source, target) pairs, in a fixed enumeration
    // order: inputs then neurons as sources, neurons as targets.
    std::set<std::pair<std::uint32_t, std::uint32_t>> existing;
    for (const auto& conn : child.connections) existing.emplace(conn.pre, conn.post);

    std::vector<std::uint32_t> sources;
    for (std::uint32_t i = 0; i < child.num_inputs; ++i) sources.push_back(i);
    for (const auto& n : child.neurons) sources.push_back(n.id);

    std::vector<std::pair<std::uint32_t, std::uint32_t>> free_pairs;
    for (const std::uint32_t pre : sources)
      for (const auto& n : child.neurons)
        if (!existing.count({pre, n.id})) free_pairs.emplace_back(pre, n.id);

    if (!free_pairs.empty()) {
      const auto& pick = free_pairs[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(free_pairs.size()) - 1))];
      child.connections.push_back({pick.first, pick.second, rng.uniform(-1.0, 1.0)});
    }
  }

  if (rng.bernoulli(rates.del_connection_prob) && !child.connections.empty()) {
    const auto victim = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(child.connections.size()) - 1));
    child.connections.erase(child.connections.begin() + static_cast<std::ptrdiff_t>(victim));
  }

  if (rng.bernoulli(rates.add_neuron_prob)) {
    const std::uint32_t fresh = child.next_neuron_id();
    const NeuronKind kind = rng.bernoulli(0.5) ? NeuronKind::Modulatory : NeuronKind::Standard;

    std::vector<std::uint32_t> sources;
    for (std::uint32_t i = 0; i < child.num_inputs; ++i) sources.push_back(i);
    for (const auto& n : child.neurons) sources.push_back(n.id);
    const std::uint32_t in_src = sources[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(sources.size()) - 1))];
    const std::uint32_t out_dst =
        child.neurons[static_cast<std::size_t>(
                          rng.uniform_int(0, static_cast<std::int64_t>(child.neurons.size()) - 1))]
            .id;

    child.neurons.push_back({fresh, kind});
    child.connections.push_back({in_src, fresh, rng.uniform(-1.0, 1.0)});
    child.connections.push_back({fresh, out_dst, rng.uniform(-1.0, 1.0)});
  }

  if (rng.bernoulli(rates.del_neuron_prob)) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < child.neurons.size(); ++i)
      if (child.neurons[i].id != child.output_id) candidates.push_back(i);
    if (!candidates.empty()) {
      const std::size_t victim = candidates[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];
      const std::uint32_t victim_id = child.neurons[victim].id;
      child.neurons.erase(child.neurons.begin() + static_cast<std::ptrdiff_t>(victim));
      std::erase_if(child.connections, [victim_id](const ConnectionGene& conn) {
        return conn.pre == victim_id || conn.post == victim_id;
      });
    }
  }

  if (rng.bernoulli(rates.flip_kind_prob)) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < child.neurons.size(); ++i)
      if (child.neurons[i].id != child.output_id) candidates.push_back(i);
    if (!candidates.empty()) {
      auto& neuron = child.neurons[candidates[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))]];
      neuron.kind = neuron.kind == NeuronKind::Standard ? NeuronKind::Modulatory
                                                        : NeuronKind::Standard;
    }
  }

  if (rng.bernoulli(rates.rule_perturb_prob)) {
    child.rule.alpha = std::clamp(child.rule.alpha + rng.normal(0.0, rates.rule_sigma), 0.0, 1.0);
    child.rule.a = clamp_unit(child.rule.a + rng.normal(0.0, rates.rule_sigma));
    child.rule.b = clamp_unit(child.rule.b + rng.normal(0.0, rates.rule_sigma));
    child.rule.c = clamp_unit(child.rule.c + rng.normal(0.0, rates.rule_sigma));
    child.rule.d = clamp_unit(child.rule.d + rng.normal(0.0, rates.rule_sigma));
  }

  validate(child);
  return child;
}

namespace {

std::vector<std::size_t> rank_indices(const std::vector<Individual>& population) {
  std::vector<std::size_t> order(population.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (population[a].fitness != population[b].fitness)
      return population[a].fitness > population[b].fitness;
    return population[a].id < population[b].id;
  });
  return order;
}

}  // namespace

std::vector<Individual> next_generation(const std::vector<Individual>& population,
                                        const EvolutionConfig& config, int generation) {
  config.validate();
  if (population.empty()) throw std::invalid_argument("next_generation: empty population");
  for (const auto& ind : population)
    if (!ind.evaluated()) throw std::logic_error("next_generation: unevaluated individual");

  const auto n = population.size();
  const auto elites = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(config.elite_fraction * static_cast<double>(n))));
  const auto order = rank_indices(population);

  std::vector<Individual> next;
  next.reserve(n);
  for (std::size_t slot = 0; slot < elites; ++slot) next.push_back(population[order[slot]]);

  const std::uint64_t gen_index = static_cast<std::uint64_t>(generation);
  for (std::size_t slot = elites; slot < n; ++slot) {
    Rng select_rng(derive_seed(config.rng_seed, "select",
                               gen_index * n + static_cast<std::uint64_t>(slot)));
    const std::size_t parent = tournament_select(population, config.tournament_segment,
                                                 select_rng);
    Rng mutate_rng(derive_seed(config.rng_seed, "mutate",
                               gen_index * n + static_cast<std::uint64_t>(slot)));
    Individual child;
    child.genome = mutate(population[parent].genome, config.rates, mutate_rng);
    child.id = (gen_index + 1) * n + static_cast<std::uint64_t>(slot);
    next.push_back(std::move(child));
  }
  return next;
}

std::uint64_t generation_eval_seed(const EvolutionConfig& config, int generation) {
  const std::uint64_t index =
      config.reseed_each_generation ? static_cast<std::uint64_t>(generation) : 0;
  return derive_seed(config.rng_seed, "eval", index);
}

namespace {

void evaluate_population(std::vector<Individual>& population, const EvolutionConfig& config,
                         const CtGraph& env, const FeaturePipeline& features,
                         const TrialConfig& trial_config, const LatentTable& latents,
                         std::uint64_t eval_seed) {
  const int workers = std::min<int>(config.workers, static_cast<int>(population.size()));
  if (workers <= 1) {
    for (auto& ind : population)
      ind.fitness = evaluate_fitness(ind.genome, env, trial_config, features, eval_seed,
                                     &latents);
    return;
  }

  std::atomic<std::size_t> cursor{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= population.size()) return;
      try {
        population[i].fitness = evaluate_fitness(population[i].genome, env, trial_config,
                                                 features, eval_seed, &latents);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

GenerationStats summarize(const std::vector<Individual>& population, int generation) {
  GenerationStats stats;
  stats.generation = generation;
  double sum = 0.0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < population.size(); ++i) {
    sum += population[i].fitness;
    if (population[i].fitness > population[best].fitness ||
        (population[i].fitness == population[best].fitness &&
         population[i].id < population[best].id))
      best = i;
  }
  const double mean = sum / static_cast<double>(population.size());
  double var = 0.0;
  for (const auto& ind : population) {
    const double d = ind.fitness - mean;
    var += d * d;
  }
  stats.best_fitness = population[best].fitness;
  stats.mean_fitness = mean;
  stats.std_fitness = std::sqrt(var / static_cast<double>(population.size()));
  stats.best_genome_id = population[best].id;
  return stats;
}

}  // namespace

EvolutionResult run_evolution(const EvolutionConfig& config, const CtGraph& env,
                              const FeaturePipeline& features, const TrialConfig& trial_config,
                              const GenerationHook& hook, const Checkpoint* resume) {
  config.validate();
  trial_config.validate();
  const LatentTable latents = LatentTable::build(env, features);

  EvolutionResult result;
  std::vector<Individual> population;
  int start_generation = 0;

  if (resume) {
    if (resume->population.size() != static_cast<std::size_t>(config.population_size))
      throw std::invalid_argument("checkpoint population size does not match config");
    population = next_generation(resume->population, config, resume->generation);
    start_generation = resume->generation + 1;
    result.best_genome = resume->best_genome;
    result.best_fitness = resume->best_fitness;
    result.best_id = resume->best_id;
  } else {
    population.reserve(static_cast<std::size_t>(config.population_size));
    for (int i = 0; i < config.population_size; ++i) {
      Rng rng(derive_seed(config.rng_seed, "init", static_cast<std::uint64_t>(i)));
      Individual ind;
      ind.genome =
          make_seed_genome(static_cast<std::uint32_t>(features.autoencoder.latent_dim()), rng);
      ind.id = static_cast<std::uint64_t>(i);
      population.push_back(std::move(ind));
    }
  }

  for (int gen = start_generation; gen < config.generations; ++gen) {
    const std::uint64_t eval_seed = generation_eval_seed(config, gen);
    evaluate_population(population, config, env, features, trial_config, latents, eval_seed);

    const GenerationStats stats = summarize(population, gen);
    result.log.push_back(stats);
    if (stats.best_fitness > result.best_fitness) {
      for (const auto& ind : population) {
        if (ind.id == stats.best_genome_id) {
          result.best_genome = ind.genome;
          result.best_fitness = stats.best_fitness;
          result.best_id = ind.id;
          break;
        }
      }
    }

    if (hook) {
      const GenerationView view{stats, population, result.best_genome, result.best_fitness,
                                result.best_id};
      if (!hook(view)) break;
    }
    if (!std::isnan(config.target_fitness) && stats.best_fitness >= config.target_fitness)
      break;

    if (gen + 1 < config.generations)
      population = next_generation(population, config, gen);
  }
  return result;
}

namespace {

nlohmann::json individual_to_json(const Individual& ind) {
  return {{"id", ind.id},
          {"fitness", ind.fitness},
          {"genome", nlohmann::json::parse(genome_to_json(ind.genome))}};
}

Individual individual_from_json(const nlohmann::json& doc) {
  Individual ind;
  ind.id = doc.at("id").get<std::uint64_t>();
  ind.fitness = doc.at("fitness").get<double>();
  ind.genome = genome_from_json(doc.at("genome").dump());
  return ind;
}

constexpr int kCheckpointSchemaVersion = 1;

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  nlohmann::json doc;
  doc["version"] = kCheckpointSchemaVersion;
  doc["generation"] = checkpoint.generation;
  doc["best_fitness"] = checkpoint.best_fitness;
  doc["best_id"] = checkpoint.best_id;
  doc["best_genome"] = nlohmann::json::parse(genome_to_json(checkpoint.best_genome));
  doc["population"] = nlohmann::json::array();
  for (const auto& ind : checkpoint.population)
    doc["population"].push_back(individual_to_json(ind));
  write_text_file(path, doc.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse checkpoint " + path + ": " + e.what());
  }
  if (doc.value("version", 0) != kCheckpointSchemaVersion)
    throw std::runtime_error("unsupported checkpoint schema version in " + path);
  Checkpoint checkpoint;
  try {
    checkpoint.generation = doc.at("generation").get<int>();
    checkpoint.best_fitness = doc.at("best_fitness").get<double>();
    checkpoint.best_id = doc.at("best_id").get<std::uint64_t>();
    checkpoint.best_genome = genome_from_json(doc.at("best_genome").dump());
    for (const auto& ind : doc.at("population"))
      checkpoint.population.push_back(individual_from_json(ind));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint " + path + ": " + e.what());
  }
  return checkpoint;
}

void write_generation_log_csv(const std::vector<GenerationStats>& log,
                              const std::string& path) {
  CsvWriter csv(path);
  csv.write_row({"generation", "best_fitness", "mean_fitness", "std_fitness",
                 "best_genome_id"});
  for (const auto& row : log)
    csv.write_row({std::to_string(row.generation), format_double(row.best_fitness),
                   format_double(row.mean_fitness), format_double(row.std_fitness),
                   std::to_string(row.best_genome_id)});
}

}  // namespace evoplast
