#include "evoplast/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "evoplast/csv.hpp"

namespace evoplast {

namespace {

std::string pixel_key(const Observation& obs) {
  std::string key(obs.pixels.size() * sizeof(double), '\0');
  std::memcpy(key.data(), obs.pixels.data(), key.size());
  return key;
}

}  // namespace

void TrialConfig::validate() const {
  if (episodes_per_trial < 1) throw std::invalid_argument("episodes_per_trial must be >= 1");
  if (num_tasks < 1) throw std::invalid_argument("num_tasks must be >= 1");
  if (trials_per_eval < 1) throw std::invalid_argument("trials_per_eval must be >= 1");
  if (num_tasks > episodes_per_trial)
    throw std::invalid_argument("more tasks than episodes in a trial");
  if (num_tasks == 2) {
    if (!(1 <= change_lo && change_lo <= change_hi && change_hi < episodes_per_trial))
      throw std::invalid_argument("change window must satisfy 1 <= lo <= hi < episodes");
  }
  if (max_steps_per_episode < 0)
    throw std::invalid_argument("max_steps_per_episode must be >= 0");
}

int TrialConfig::resolved_max_steps(const CtGraph& env) const {
  return max_steps_per_episode > 0 ? max_steps_per_episode
                                   : env.natural_episode_length() + 2;
}

int TaskSchedule::goal_at(int episode) const {
  int segment = 0;
  while (segment < static_cast<int>(change_points.size()) &&
         episode >= change_points[segment])
    ++segment;
  return goals[segment];
}

TaskSchedule schedule_tasks(const TrialConfig& config, int num_end_states, Rng& rng) {
  config.validate();
  if (num_end_states < 2 && config.num_tasks > 1)
    throw std::invalid_argument("cannot change tasks with a single end state");

  TaskSchedule schedule;
  schedule.goals.reserve(config.num_tasks);
  int goal = static_cast<int>(rng.uniform_int(0, num_end_states - 1));
  schedule.goals.push_back(goal);
  for (int t = 1; t < config.num_tasks; ++t) {
    // New goal drawn uniformly from the other end states.
    int next = static_cast<int>(rng.uniform_int(0, num_end_states - 2));
    if (next >= goal) ++next;
    schedule.goals.push_back(next);
    goal = next;
  }

  if (config.num_tasks == 2) {
    schedule.change_points.push_back(
        static_cast<int>(rng.uniform_int(config.change_lo, config.change_hi)));
  } else if (config.num_tasks > 2) {
    const double segment = static_cast<double>(config.episodes_per_trial) / config.num_tasks;
    const int jitter = std::max(1, static_cast<int>(std::floor(0.15 * segment)));
    int prev = 0;
    for (int t = 1; t < config.num_tasks; ++t) {
      int point = static_cast<int>(std::lround(segment * t)) +
                  static_cast<int>(rng.uniform_int(-jitter, jitter));
      const int lo = prev + 1;
      const int hi = config.episodes_per_trial - (config.num_tasks - t);
      if (lo > hi) throw std::invalid_argument("trial too short for the task count");
      point = std::clamp(point, lo, hi);
      schedule.change_points.push_back(point);
      prev = point;
    }
  }
  return schedule;
}

LatentTable LatentTable::build(const CtGraph& env, const FeaturePipeline& features) {
  LatentTable table;
  for (const auto& obs : collect_observations(env))
    table.by_pixels_.emplace(pixel_key(obs), features.process(obs).values);
  return table;
}

const std::vector<double>* LatentTable::find(const Observation& obs) const {
  const auto it = by_pixels_.find(pixel_key(obs));
  return it == by_pixels_.end() ? nullptr : &it->second;
}

PlasticNetController::PlasticNetController(const Genome& genome,
                                           const FeaturePipeline& features,
                                           const LatentTable* shared_latents)
    : net_(genome),
      state_(net_.init_state()),
      features_(&features),
      shared_latents_(shared_latents) {}

void PlasticNetController::begin_trial() { state_ = net_.init_state(); }

void PlasticNetController::begin_episode(int /*goal_index*/) {
  // Plastic weights carry over; only the activations restart.
  std::fill(state_.a_std.begin(), state_.a_std.end(), 0.0);
  std::fill(state_.a_mod.begin(), state_.a_mod.end(), 0.0);
  std::fill(state_.input.begin(), state_.input.end(), 0.0);
}

const std::vector<double>& PlasticNetController::transformed(const Observation& obs) {
  if (shared_latents_) {
    if (const auto* hit = shared_latents_->find(obs)) return *hit;
  }
  auto key = pixel_key(obs);
  const auto it = local_cache_.find(key);
  if (it != local_cache_.end()) return it->second;
  return local_cache_.emplace(std::move(key), features_->process(obs).values).first->second;
}

double PlasticNetController::process(const Observation& obs, TraceStep* record,
                                     bool record_activations) {
  const auto& input = transformed(obs);
  const double out = net_.propagate(state_, input);
  net_.hebbian_update(state_);
  if (record) {
    record->output_activation = out;
    if (record_activations) {
      record->a_std = state_.a_std;
      record->a_mod = state_.a_mod;
    }
  }
  return out;
}

int PlasticNetController::act(const Observation& obs, TraceStep* record,
                              bool record_activations) {
  return discretize_action(process(obs, record, record_activations));
}

void PlasticNetController::observe_terminal(const Observation& obs, TraceStep* record,
                                            bool record_activations) {
  process(obs, record, record_activations);
}

OracleReplayController::OracleReplayController(const CtGraph& env) : env_(&env) {}

void OracleReplayController::begin_episode(int goal_index) {
  plan_ = env_->oracle_actions(goal_index);
  cursor_ = 0;
}

int OracleReplayController::act(const Observation&, TraceStep*, bool) {
  if (cursor_ >= plan_.size())
    throw std::logic_error("oracle replay ran past its action plan");
  return plan_[cursor_++];
}

EpisodeTrace run_episode(const CtGraph& env, int goal_index, Controller& controller,
                         int max_steps, bool record_activations) {
  EpisodeTrace trace;
  auto [state, obs] = env.reset(goal_index);

  for (int t = 0; t < max_steps; ++t) {
    TraceStep step;
    step.phase = state.phase;
    const int action = controller.act(obs, &step, record_activations);
    const StepResult result = env.step(state, action);
    step.action = action;
    step.reward = result.reward;
    trace.total_reward += result.reward;
    trace.steps.push_back(std::move(step));
    obs = result.observation;

    if (result.done) {
      trace.goal_found = env.goal_found(state);
      if (state.phase == Phase::End) {
        // Let the network see the end-state image (the reward cue step).
        TraceStep terminal;
        terminal.phase = Phase::End;
        controller.observe_terminal(obs, &terminal, record_activations);
        trace.steps.push_back(std::move(terminal));
      }
      return trace;
    }
  }

  state.phase = Phase::Done;
  trace.truncated = true;
  return trace;
}

int EpisodeTrace::num_actions() const {
  int count = 0;
  for (const auto& step : steps) count += step.action.has_value() ? 1 : 0;
  return count;
}

TrialResult run_trial(const CtGraph& env, const TrialConfig& config, Controller& controller,
                      Rng& rng) {
  config.validate();
  const TaskSchedule schedule = schedule_tasks(config, env.num_end_states(), rng);
  const int max_steps = config.resolved_max_steps(env);

  TrialResult result;
  result.goals = schedule.goals;
  result.change_points = schedule.change_points;
  result.episodes.reserve(config.episodes_per_trial);

  controller.begin_trial();
  for (int ep = 0; ep < config.episodes_per_trial; ++ep) {
    const int goal = schedule.goal_at(ep);
    controller.begin_episode(goal);
    EpisodeTrace trace =
        run_episode(env, goal, controller, max_steps, config.record_activations);
    result.trial_reward += trace.total_reward;
    result.episodes.push_back(std::move(trace));
  }
  return result;
}

double evaluate_controller(const CtGraph& env, const TrialConfig& config,
                           Controller& controller, std::uint64_t eval_seed) {
  double total = 0.0;
  for (int trial = 0; trial < config.trials_per_eval; ++trial) {
    Rng rng(derive_seed(eval_seed, static_cast<std::uint64_t>(trial)));
    total += run_trial(env, config, controller, rng).trial_reward;
  }
  return total / config.trials_per_eval;
}

double evaluate_fitness(const Genome& genome, const CtGraph& env, const TrialConfig& config,
                        const FeaturePipeline& features, std::uint64_t eval_seed,
                        const LatentTable* shared_latents) {
  PlasticNetController controller(genome, features, shared_latents);
  return evaluate_controller(env, config, controller, eval_seed);
}

void write_steps_csv(const std::vector<TrialResult>& trials, const std::string& path) {
  CsvWriter csv(path);
  csv.write_row({"trial", "episode", "step", "phase", "action", "reward",
                 "output_activation"});
  for (std::size_t t = 0; t < trials.size(); ++t) {
    for (std::size_t ep = 0; ep < trials[t].episodes.size(); ++ep) {
      const auto& steps = trials[t].episodes[ep].steps;
      for (std::size_t s = 0; s < steps.size(); ++s) {
        const auto& step = steps[s];
        csv.write_row({std::to_string(t), std::to_string(ep), std::to_string(s + 1),
                       to_string(step.phase),
                       step.action ? std::to_string(*step.action) : std::string(""),
                       format_double(step.reward), format_double(step.output_activation)});
      }
    }
  }
}

void write_episodes_csv(const std::vector<TrialResult>& trials, const std::string& path) {
  CsvWriter csv(path);
  csv.write_row({"trial", "episode", "goal", "reward", "length"});
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& trial = trials[t];
    for (std::size_t ep = 0; ep < trial.episodes.size(); ++ep) {
      TaskSchedule schedule{trial.goals, trial.change_points};
      csv.write_row({std::to_string(t), std::to_string(ep),
                     std::to_string(schedule.goal_at(static_cast<int>(ep))),
                     format_double(trial.episodes[ep].total_reward),
                     std::to_string(trial.episodes[ep].num_actions())});
    }
  }
}

}  // namespace evoplast
