#include "evoplast/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "evoplast/csv.hpp"

namespace evoplast {

namespace {

constexpr double kSeparationEpsilon = 1e-12;

// Linear-interpolation quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

const TraceStep* terminal_end_step(const EpisodeTrace& trace) {
  if (trace.steps.empty()) return nullptr;
  const TraceStep& last = trace.steps.back();
  return (!last.action.has_value() && last.phase == Phase::End) ? &last : nullptr;
}

}  // namespace

DistStats summarize_samples(std::vector<double> samples) {
  DistStats stats;
  stats.n = static_cast<int>(samples.size());
  if (samples.empty()) return stats;
  double sum = 0.0;
  for (double v : samples) sum += v;
  stats.mean = sum / static_cast<double>(samples.size());
  double var = 0.0;
  for (double v : samples) {
    const double d = v - stats.mean;
    var += d * d;
  }
  stats.stddev = std::sqrt(var / static_cast<double>(samples.size()));
  std::sort(samples.begin(), samples.end());
  stats.q1 = quantile_sorted(samples, 0.25);
  stats.median = quantile_sorted(samples, 0.5);
  stats.q3 = quantile_sorted(samples, 0.75);
  return stats;
}

ActivationDataset collect_dataset(const Genome& genome, const CtGraph& env,
                                  const TrialConfig& trial_config,
                                  const FeaturePipeline& features, int n_trials, Rng& rng) {
  if (n_trials < 0) throw std::invalid_argument("collect_dataset: negative trial count");
  TrialConfig config = trial_config;
  config.record_activations = true;

  ActivationDataset dataset;
  PlasticNetController controller(genome, features);
  dataset.neuron_ids = controller.net().neuron_ids();
  for (int t = 0; t < n_trials; ++t) {
    TrialResult trial = run_trial(env, config, controller, rng);
    for (auto& trace : trial.episodes) dataset.traces.push_back(std::move(trace));
  }
  return dataset;
}

LocationStats location_stats(const ActivationDataset& dataset) {
  if (dataset.traces.empty()) throw std::invalid_argument("location_stats: empty dataset");

  const std::size_t num_neurons = dataset.neuron_ids.size();
  std::size_t max_steps = 0;
  for (const auto& trace : dataset.traces) max_steps = std::max(max_steps, trace.steps.size());

  // samples[t][n]: all |a_std| of neuron n at timestep t+1.
  std::vector<std::vector<std::vector<double>>> samples(
      max_steps, std::vector<std::vector<double>>(num_neurons));
  for (const auto& trace : dataset.traces) {
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
      const auto& recorded = trace.steps[t].a_std;
      if (recorded.size() != num_neurons)
        throw std::invalid_argument("location_stats: trace without recorded activations");
      for (std::size_t n = 0; n < num_neurons; ++n)
        samples[t][n].push_back(std::fabs(recorded[n]));
    }
  }

  LocationStats out;
  out.neuron_ids = dataset.neuron_ids;
  out.max_timestep = static_cast<int>(max_steps);
  out.stats.resize(num_neurons);
  for (std::size_t n = 0; n < num_neurons; ++n) {
    out.stats[n].reserve(max_steps);
    for (std::size_t t = 0; t < max_steps; ++t)
      out.stats[n].push_back(summarize_samples(std::move(samples[t][n])));
  }
  return out;
}

RewardCueStats reward_cue_stats(const ActivationDataset& dataset) {
  const std::size_t num_neurons = dataset.neuron_ids.size();
  std::vector<std::vector<double>> found(num_neurons), not_found(num_neurons);

  for (const auto& trace : dataset.traces) {
    const TraceStep* end_step = terminal_end_step(trace);
    if (!end_step) continue;  // crash or truncated episode: no end-state observation
    if (end_step->a_std.size() != num_neurons)
      throw std::invalid_argument("reward_cue_stats: trace without recorded activations");
    auto& bucket = trace.goal_found ? found : not_found;
    for (std::size_t n = 0; n < num_neurons; ++n)
      bucket[n].push_back(end_step->a_std[n]);
  }

  if (num_neurons > 0 && found[0].empty())
    throw std::runtime_error("reward_cue_stats: dataset has no goal-found episodes");
  if (num_neurons > 0 && not_found[0].empty())
    throw std::runtime_error("reward_cue_stats: dataset has no goal-not-found episodes");

  RewardCueStats out;
  out.neuron_ids = dataset.neuron_ids;
  out.found.reserve(num_neurons);
  out.not_found.reserve(num_neurons);
  out.separation.reserve(num_neurons);
  for (std::size_t n = 0; n < num_neurons; ++n) {
    DistStats f = summarize_samples(std::move(found[n]));
    DistStats nf = summarize_samples(std::move(not_found[n]));
    const double n1 = f.n, n2 = nf.n;
    double pooled = 0.0;
    if (n1 + n2 > 2)
      pooled = std::sqrt((n1 * f.stddev * f.stddev + n2 * nf.stddev * nf.stddev) /
                         (n1 + n2 - 2.0));
    out.separation.push_back(std::fabs(f.mean - nf.mean) / (pooled + kSeparationEpsilon));
    out.found.push_back(f);
    out.not_found.push_back(nf);
  }
  return out;
}

namespace {

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void write_dist_row(CsvWriter& csv, std::vector<std::string> prefix, const DistStats& stats) {
  prefix.push_back(std::to_string(stats.n));
  prefix.push_back(format_double(stats.mean));
  prefix.push_back(format_double(stats.stddev));
  prefix.push_back(format_double(stats.q1));
  prefix.push_back(format_double(stats.median));
  prefix.push_back(format_double(stats.q3));
  csv.write_row(prefix);
}

}  // namespace

void export_report(const LocationStats& location, const RewardCueStats& cue,
                   const std::string& directory) {
  ensure_directory(directory);

  {
    CsvWriter csv(join_path(directory, "location_stats.csv"));
    csv.write_row({"neuron_id", "timestep", "n", "mean_abs", "std_abs", "q1_abs", "median_abs",
                   "q3_abs"});
    for (std::size_t n = 0; n < location.neuron_ids.size(); ++n)
      for (int t = 0; t < location.max_timestep; ++t)
        write_dist_row(csv,
                       {std::to_string(location.neuron_ids[n]), std::to_string(t + 1)},
                       location.stats[n][static_cast<std::size_t>(t)]);
  }

  {
    CsvWriter csv(join_path(directory, "reward_cue_stats.csv"));
    csv.write_row({"neuron_id", "goal_found", "n", "mean", "std", "q1", "median", "q3",
                   "separation"});
    for (std::size_t n = 0; n < cue.neuron_ids.size(); ++n) {
      const auto id = std::to_string(cue.neuron_ids[n]);
      const auto sep = format_double(cue.separation[n]);
      std::vector<std::string> row = {id, "true"};
      row.push_back(std::to_string(cue.found[n].n));
      row.push_back(format_double(cue.found[n].mean));
      row.push_back(format_double(cue.found[n].stddev));
      row.push_back(format_double(cue.found[n].q1));
      row.push_back(format_double(cue.found[n].median));
      row.push_back(format_double(cue.found[n].q3));
      row.push_back(sep);
      csv.write_row(row);
      row = {id, "false"};
      row.push_back(std::to_string(cue.not_found[n].n));
      row.push_back(format_double(cue.not_found[n].mean));
      row.push_back(format_double(cue.not_found[n].stddev));
      row.push_back(format_double(cue.not_found[n].q1));
      row.push_back(format_double(cue.not_found[n].median));
      row.push_back(format_double(cue.not_found[n].q3));
      row.push_back(sep);
      csv.write_row(row);
    }
  }

  {
    // Long format for plotting scripts: one (neuron, timestep, statistic) per row.
    CsvWriter csv(join_path(directory, "stats_long.csv"));
    csv.write_row({"neuron_id", "timestep", "statistic", "value"});
    for (std::size_t n = 0; n < location.neuron_ids.size(); ++n) {
      const auto id = std::to_string(location.neuron_ids[n]);
      for (int t = 0; t < location.max_timestep; ++t) {
        const auto& s = location.stats[n][static_cast<std::size_t>(t)];
        const auto ts = std::to_string(t + 1);
        csv.write_row({id, ts, "n", std::to_string(s.n)});
        csv.write_row({id, ts, "mean_abs", format_double(s.mean)});
        csv.write_row({id, ts, "std_abs", format_double(s.stddev)});
        csv.write_row({id, ts, "q1_abs", format_double(s.q1)});
        csv.write_row({id, ts, "median_abs", format_double(s.median)});
        csv.write_row({id, ts, "q3_abs", format_double(s.q3)});
      }
    }
    for (std::size_t n = 0; n < cue.neuron_ids.size(); ++n) {
      const auto id = std::to_string(cue.neuron_ids[n]);
      csv.write_row({id, "end", "found_mean", format_double(cue.found[n].mean)});
      csv.write_row({id, "end", "found_std", format_double(cue.found[n].stddev)});
      csv.write_row({id, "end", "notfound_mean", format_double(cue.not_found[n].mean)});
      csv.write_row({id, "end", "notfound_std", format_double(cue.not_found[n].stddev)});
      csv.write_row({id, "end", "separation", format_double(cue.separation[n])});
    }
  }
}

}  // namespace evoplast
