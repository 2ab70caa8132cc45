#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace evoplast {

// States of the tree-graph walk. Done is never produced by the environment
// itself; the harness uses it to mark an episode it had to cut off.
enum class Phase { Start, Wait, Decision, End, Crash, Done };

const char* to_string(Phase phase);

inline constexpr int kActionWait = 0;
inline constexpr int kActionChoice1 = 1;
inline constexpr int kActionChoice2 = 2;

struct CtGraphConfig {
  int branching_factor = 2;
  int depth = 2;
  int obs_side = 12;
  double goal_reward = 1.0;
  double crash_reward = 0.0;
  double step_reward = 0.0;
  // Wait actions required to leave a wait state. The start state always
  // takes a single step.
  int wait_delay = 1;
  std::uint64_t obs_seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Grayscale image, obs_side*obs_side values in [0,1], row-major.
struct Observation {
  std::vector<double> pixels;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

struct EnvState {
  Phase phase = Phase::Start;
  int level = 0;          // decision states already passed, 0..depth
  std::vector<int> path;  // choices taken so far, each in [0, branching_factor)
  int goal_index = 0;
  int wait_ticks = 0;     // wait actions taken in the current wait state
};

// Deterministic tree-graph POMDP. The walk is start -> (wait, decision) x depth
// -> wait -> end; every wrong action crashes and terminates. Partial
// observability: all wait states share one image, all decision states share
// one image, and the end image differs only by the presence of a bright
// square cue when the reached end state is the goal.
class CtGraph {
 public:
  explicit CtGraph(CtGraphConfig config);

  const CtGraphConfig& config() const { return config_; }
  int num_end_states() const { return num_end_states_; }
  // Actions a perfect episode takes: 1 (start) + depth*(wait_delay+1) + wait_delay.
  int natural_episode_length() const;

  std::pair<EnvState, Observation> reset(int goal_index) const;

  // Advances the state in place. Throws std::logic_error when the episode is
  // already finished and std::invalid_argument for an unknown action index.
  StepResult step(EnvState& state, int action) const;

  // The shared image for a phase. goal_found only matters for Phase::End.
  const Observation& observation_for(Phase phase, bool goal_found = false) const;

  // End-state index encoded by a complete path (most significant choice first).
  int path_index(const std::vector<int>& path) const;

  bool is_terminal(const EnvState& state) const;
  // True when the state is at the goal end state.
  bool goal_found(const EnvState& state) const;

  // The unique non-crashing action sequence reaching the given end state.
  std::vector<int> oracle_actions(int goal_index) const;

 private:
  StepResult crash(EnvState& state) const;

  CtGraphConfig config_;
  int num_end_states_ = 0;
  Observation start_, wait_, decision_, end_goal_, end_nogoal_, crash_;
};

// One row per image ("phase" label + pixel columns), for inspection.
void write_observations_csv(const CtGraph& env, const std::string& path);

}  // namespace evoplast
