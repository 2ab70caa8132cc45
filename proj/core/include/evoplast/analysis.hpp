#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evoplast/harness.hpp"

namespace evoplast {

// Activation traces of one genome across many trials. Timesteps are 1-based
// within an episode: step 1 processes the start image; for depth 2 the
// decision images land on steps 3 and 5 and the end image on step 7.
struct ActivationDataset {
  std::vector<EpisodeTrace> traces;
  std::vector<std::uint32_t> neuron_ids;
  int timestep_base = 1;
};

struct DistStats {
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

DistStats summarize_samples(std::vector<double> samples);

// Per (neuron, timestep) distribution of |a_std| pooled over every episode
// that reaches the timestep. Crash episodes contribute up to termination.
struct LocationStats {
  std::vector<std::uint32_t> neuron_ids;
  int max_timestep = 0;
  // stats[neuron][timestep-1]
  std::vector<std::vector<DistStats>> stats;
};

// Per neuron distribution of a_std at the end-state step, split by whether
// the goal was found, plus |mean difference| / (pooled std + 1e-12).
struct RewardCueStats {
  std::vector<std::uint32_t> neuron_ids;
  std::vector<DistStats> found;
  std::vector<DistStats> not_found;
  std::vector<double> separation;
};

// Runs n_trials with activation recording on and keeps the full traces.
ActivationDataset collect_dataset(const Genome& genome, const CtGraph& env,
                                  const TrialConfig& trial_config,
                                  const FeaturePipeline& features, int n_trials, Rng& rng);

LocationStats location_stats(const ActivationDataset& dataset);

// Throws std::runtime_error naming the missing class when the dataset lacks
// goal-found or goal-not-found episodes.
RewardCueStats reward_cue_stats(const ActivationDataset& dataset);

// Writes location_stats.csv, reward_cue_stats.csv and stats_long.csv.
void export_report(const LocationStats& location, const RewardCueStats& cue,
                   const std::string& directory);

}  // namespace evoplast
