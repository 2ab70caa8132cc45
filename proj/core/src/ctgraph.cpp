#include "evoplast/ctgraph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evoplast/csv.hpp"
#include "evoplast/rng.hpp"

namespace evoplast {

namespace {

constexpr int kCuePatchSide = 4;

// Seeded noise, one 3x3 box-blur pass, then stretched to span [0,1].
Observation generate_image(int side, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> noise(static_cast<std::size_t>(side) * side);
  for (auto& px : noise) px = rng.uniform();

  Observation obs;
  obs.pixels.resize(noise.size());
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= side || cc < 0 || cc >= side) continue;
          sum += noise[static_cast<std::size_t>(rr) * side + cc];
          ++count;
        }
      }
      obs.pixels[static_cast<std::size_t>(r) * side + c] = sum / count;
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(obs.pixels.begin(), obs.pixels.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi > lo) {
    for (auto& px : obs.pixels) px = (px - lo) / (hi - lo);
  }
  return obs;
}

void overlay_cue(Observation& obs, int side) {
  const int patch = std::min(kCuePatchSide, side);
  for (int r = 0; r < patch; ++r)
    for (int c = 0; c < patch; ++c) obs.pixels[static_cast<std::size_t>(r) * side + c] = 1.0;
}

}  // namespace

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Start: return "start";
    case Phase::Wait: return "wait";
    case Phase::Decision: return "decision";
    case Phase::End: return "end";
    case Phase::Crash: return "crash";
    case Phase::Done: return "done";
  }
  return "unknown";
}

void CtGraphConfig::validate() const {
  if (branching_factor < 2) throw std::invalid_argument("branching_factor must be >= 2");
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (obs_side < 4) throw std::invalid_argument("obs_side must be >= 4");
  if (wait_delay < 1) throw std::invalid_argument("wait_delay must be >= 1");
  double ends = std::pow(static_cast<double>(branching_factor), depth);
  if (ends > 1e6) throw std::invalid_argument("branching_factor^depth too large");
}

CtGraph::CtGraph(CtGraphConfig config) : config_(config) {
  config_.validate();
  num_end_states_ = 1;
  for (int i = 0; i < config_.depth; ++i) num_end_states_ *= config_.branching_factor;

  const int side = config_.obs_side;
  const std::uint64_t seed = config_.obs_seed;
  start_ = generate_image(side, derive_seed(seed, "obs-start"));
  wait_ = generate_image(side, derive_seed(seed, "obs-wait"));
  decision_ = generate_image(side, derive_seed(seed, "obs-decision"));
  end_nogoal_ = generate_image(side, derive_seed(seed, "obs-end"));
  end_goal_ = end_nogoal_;
  overlay_cue(end_goal_, side);
  crash_ = generate_image(side, derive_seed(seed, "obs-crash"));
}

int CtGraph::natural_episode_length() const {
  return 1 + config_.depth * (config_.wait_delay + 1) + config_.wait_delay;
}

std::pair<EnvState, Observation> CtGraph::reset(int goal_index) const {
  if (goal_index < 0 || goal_index >= num_end_states_)
    throw std::invalid_argument("goal_index " + std::to_string(goal_index) +
                                " out of range [0, " + std::to_string(num_end_states_) + ")");
  EnvState state;
  state.phase = Phase::Start;
  state.level = 0;
  state.goal_index = goal_index;
  state.wait_ticks = 0;
  return {std::move(state), start_};
}

StepResult CtGraph::step(EnvState& state, int action) const {
  if (is_terminal(state))
    throw std::logic_error("step() called on a finished episode");
  // Valid actions: wait plus one per branch. b=2 gives the {0,1,2} space.
  if (action < kActionWait || action > config_.branching_factor)
    throw std::invalid_argument("unknown action " + std::to_string(action));

  switch (state.phase) {
    case Phase::Start:
      if (action != kActionWait) return crash(state);
      state.phase = Phase::Wait;
      state.wait_ticks = 0;
      return {wait_, config_.step_reward, false};

    case Phase::Wait: {
      if (action != kActionWait) return crash(state);
      if (++state.wait_ticks < config_.wait_delay)
        return {wait_, config_.step_reward, false};
      if (state.level < config_.depth) {
        state.phase = Phase::Decision;
        return {decision_, config_.step_reward, false};
      }
      state.phase = Phase::End;
      const bool found = goal_found(state);
      return {found ? end_goal_ : end_nogoal_,
              found ? config_.goal_reward : config_.step_reward, true};
    }

    case Phase::Decision:
      if (action == kActionWait) return crash(state);
      state.path.push_back(action - 1);
      ++state.level;
      state.phase = Phase::Wait;
      state.wait_ticks = 0;
      return {wait_, config_.step_reward, false};

    default:
      throw std::logic_error("step() called on a finished episode");
  }
}

StepResult CtGraph::crash(EnvState& state) const {
  state.phase = Phase::Crash;
  return {crash_, config_.crash_reward, true};
}

const Observation& CtGraph::observation_for(Phase phase, bool goal_found) const {
  switch (phase) {
    case Phase::Start: return start_;
    case Phase::Wait: return wait_;
    case Phase::Decision: return decision_;
    case Phase::End: return goal_found ? end_goal_ : end_nogoal_;
    case Phase::Crash: return crash_;
    case Phase::Done: break;
  }
  throw std::invalid_argument("no observation for phase Done");
}

int CtGraph::path_index(const std::vector<int>& path) const {
  int index = 0;
  for (int choice : path) index = index * config_.branching_factor + choice;
  return index;
}

bool CtGraph::is_terminal(const EnvState& state) const {
  return state.phase == Phase::End || state.phase == Phase::Crash || state.phase == Phase::Done;
}

bool CtGraph::goal_found(const EnvState& state) const {
  return state.level == config_.depth && path_index(state.path) == state.goal_index;
}

std::vector<int> CtGraph::oracle_actions(int goal_index) const {
  if (goal_index < 0 || goal_index >= num_end_states_)
    throw std::invalid_argument("goal_index out of range");

  std::vector<int> digits(config_.depth);
  int rest = goal_index;
  for (int i = config_.depth - 1; i >= 0; --i) {
    digits[i] = rest % config_.branching_factor;
    rest /= config_.branching_factor;
  }

  std::vector<int> actions;
  actions.push_back(kActionWait);  // start state
  for (int digit : digits) {
    for (int k = 0; k < config_.wait_delay; ++k) actions.push_back(kActionWait);
    actions.push_back(digit + 1);
  }
  for (int k = 0; k < config_.wait_delay; ++k) actions.push_back(kActionWait);
  return actions;
}

void write_observations_csv(const CtGraph& env, const std::string& path) {
  CsvWriter csv(path);
  const int side = env.config().obs_side;
  std::vector<std::string> header = {"image"};
  for (int i = 0; i < side * side; ++i) header.push_back("px" + std::to_string(i));
  csv.write_row(header);

  const std::vector<std::pair<std::string, const Observation*>> images = {
      {"start", &env.observation_for(Phase::Start)},
      {"wait", &env.observation_for(Phase::Wait)},
      {"decision", &env.observation_for(Phase::Decision)},
      {"end_goal", &env.observation_for(Phase::End, true)},
      {"end_nogoal", &env.observation_for(Phase::End, false)},
      {"crash", &env.observation_for(Phase::Crash)},
  };
  for (const auto& [name, obs] : images) {
    std::vector<std::string> row = {name};
    for (double px : obs->pixels) row.push_back(format_double(px));
    csv.write_row(row);
  }
}

}  // namespace evoplast
