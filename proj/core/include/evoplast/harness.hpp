#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "evoplast/ctgraph.hpp"
#include "evoplast/features.hpp"
#include "evoplast/neuromod.hpp"
#include "evoplast/rng.hpp"

namespace evoplast {

struct TrialConfig {
  int episodes_per_trial = 100;
  int num_tasks = 2;
  int change_lo = 35;  // episode index window for the 2-task change point
  int change_hi = 65;
  int trials_per_eval = 4;
  int max_steps_per_episode = 0;  // 0 -> natural episode length + 2
  bool record_activations = false;

  void validate() const;
  int resolved_max_steps(const CtGraph& env) const;
};

// One network processing step. `action` is empty for the terminal entry where
// the end-state image is processed but the episode is already over.
struct TraceStep {
  Phase phase = Phase::Start;          // phase of the observation processed
  std::optional<int> action;
  double reward = 0.0;
  double output_activation = 0.0;
  std::vector<double> a_std;           // filled only when recording activations
  std::vector<double> a_mod;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  double total_reward = 0.0;
  bool goal_found = false;
  bool truncated = false;  // cut off by max_steps

  // Environment steps taken (the terminal processing entry does not count).
  int num_actions() const;
};

struct TrialResult {
  std::vector<EpisodeTrace> episodes;
  std::vector<int> change_points;  // first episode index of each later segment
  std::vector<int> goals;          // goal per segment, consecutive entries differ
  double trial_reward = 0.0;
};

struct TaskSchedule {
  std::vector<int> goals;
  std::vector<int> change_points;

  int goal_at(int episode) const;
};

// Samples segment goals (consecutive distinct) and change points. Two tasks
// draw the single change point uniformly from [change_lo, change_hi]; more
// tasks split the trial evenly with +/-15% jitter on each boundary.
TaskSchedule schedule_tasks(const TrialConfig& config, int num_end_states, Rng& rng);

// Decision maker driven by the harness. begin_episode receives the goal so
// test doubles can cheat; real controllers must ignore it.
class Controller {
 public:
  virtual ~Controller() = default;

  virtual void begin_trial() = 0;
  virtual void begin_episode(int goal_index) = 0;
  // Process an observation and choose an action. Fills `record` when asked.
  virtual int act(const Observation& obs, TraceStep* record, bool record_activations) = 0;
  // Process a terminal observation without acting.
  virtual void observe_terminal(const Observation& obs, TraceStep* record,
                                bool record_activations) = 0;
};

// Cache of transformed latents for the environment's fixed observation set,
// keyed by pixel bytes. Immutable after build, shareable across workers.
class LatentTable {
 public:
  static LatentTable build(const CtGraph& env, const FeaturePipeline& features);

  const std::vector<double>* find(const Observation& obs) const;

 private:
  std::unordered_map<std::string, std::vector<double>> by_pixels_;
};

// The evolved plastic network behind the Controller interface. Plastic
// weights reset at trial start and persist across episodes; activations reset
// to zero at every episode start. The reward is never an input.
class PlasticNetController : public Controller {
 public:
  PlasticNetController(const Genome& genome, const FeaturePipeline& features,
                       const LatentTable* shared_latents = nullptr);

  void begin_trial() override;
  void begin_episode(int goal_index) override;
  int act(const Observation& obs, TraceStep* record, bool record_activations) override;
  void observe_terminal(const Observation& obs, TraceStep* record,
                        bool record_activations) override;

  const NetworkState& state() const { return state_; }
  const CompiledNet& net() const { return net_; }

 private:
  const std::vector<double>& transformed(const Observation& obs);
  double process(const Observation& obs, TraceStep* record, bool record_activations);

  CompiledNet net_;
  NetworkState state_;
  const FeaturePipeline* features_;
  const LatentTable* shared_latents_;
  std::unordered_map<std::string, std::vector<double>> local_cache_;
};

// Test double with perfect task knowledge: replays the environment's oracle
// action sequence for the episode goal.
class OracleReplayController : public Controller {
 public:
  explicit OracleReplayController(const CtGraph& env);

  void begin_trial() override {}
  void begin_episode(int goal_index) override;
  int act(const Observation& obs, TraceStep* record, bool record_activations) override;
  void observe_terminal(const Observation&, TraceStep*, bool) override {}

 private:
  const CtGraph* env_;
  std::vector<int> plan_;
  std::size_t cursor_ = 0;
};

// One episode: observe, act, learn, until the environment terminates. The
// end-state observation is processed once more (no action) so the network
// sees the reward cue; crash images are not processed.
EpisodeTrace run_episode(const CtGraph& env, int goal_index, Controller& controller,
                         int max_steps, bool record_activations);

TrialResult run_trial(const CtGraph& env, const TrialConfig& config, Controller& controller,
                      Rng& rng);

// Mean trial reward over trials_per_eval trials, each seeded from
// derive_seed(eval_seed, trial_index).
double evaluate_controller(const CtGraph& env, const TrialConfig& config,
                           Controller& controller, std::uint64_t eval_seed);

double evaluate_fitness(const Genome& genome, const CtGraph& env, const TrialConfig& config,
                        const FeaturePipeline& features, std::uint64_t eval_seed,
                        const LatentTable* shared_latents = nullptr);

// step-per-row and episode-per-row exports.
void write_steps_csv(const std::vector<TrialResult>& trials, const std::string& path);
void write_episodes_csv(const std::vector<TrialResult>& trials, const std::string& path);

}  // namespace evoplast
