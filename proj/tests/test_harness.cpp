#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include "evoplast/csv.hpp"
#include "evoplast/harness.hpp"
#include "support/fixtures.hpp"

using namespace evoplast;

namespace {

CtGraph make_env() {
  CtGraphConfig config;
  config.obs_seed = 0x5eed;
  return CtGraph(config);
}

const FeaturePipeline& shared_pipeline() {
  static const FeaturePipeline pipeline = fixtures::train_pipeline(make_env(), 2000, 21);
  return pipeline;
}

// Always emits the same action.
class ConstantController : public Controller {
 public:
  explicit ConstantController(int action) : action_(action) {}
  void begin_trial() override {}
  void begin_episode(int) override {}
  int act(const Observation&, TraceStep*, bool) override { return action_; }
  void observe_terminal(const Observation&, TraceStep*, bool) override {}

 private:
  int action_;
};

}  // namespace

TEST_CASE("trial config validation") {
  TrialConfig config;
  CHECK_NOTHROW(config.validate());
  config.change_lo = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = TrialConfig{};
  config.change_hi = 100;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = TrialConfig{};
  config.num_tasks = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = TrialConfig{};
  config.num_tasks = 101;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("task schedules sample the change window and distinct goals") {
  const TrialConfig config;
  Rng rng(1);

  TrialConfig single = config;
  single.num_tasks = 1;
  CHECK(schedule_tasks(single, 4, rng).change_points.empty());

  for (int i = 0; i < 500; ++i) {
    const TaskSchedule schedule = schedule_tasks(config, 4, rng);
    REQUIRE(schedule.goals.size() == 2);
    REQUIRE(schedule.change_points.size() == 1);
    CHECK(schedule.goals[0] != schedule.goals[1]);
    CHECK(schedule.change_points[0] >= 35);
    CHECK(schedule.change_points[0] <= 65);
    CHECK(schedule.goal_at(0) == schedule.goals[0]);
    CHECK(schedule.goal_at(99) == schedule.goals[1]);
    CHECK(schedule.goal_at(schedule.change_points[0]) == schedule.goals[1]);
    CHECK(schedule.goal_at(schedule.change_points[0] - 1) == schedule.goals[0]);
  }
}

TEST_CASE("change points cover the window uniformly (chi-square at 1%)") {
  const TrialConfig config;
  Rng rng(77);
  const int samples = 10000;
  std::vector<int> counts(31, 0);
  for (int i = 0; i < samples; ++i)
    counts[static_cast<std::size_t>(schedule_tasks(config, 4, rng).change_points[0] - 35)]++;
  const double expected = static_cast<double>(samples) / 31.0;
  double chi2 = 0.0;
  for (const int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 50.89);  // critical value, df=30, alpha=0.01
}

TEST_CASE("multi-task schedules split the trial with jitter") {
  TrialConfig config;
  config.num_tasks = 4;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const TaskSchedule schedule = schedule_tasks(config, 4, rng);
    REQUIRE(schedule.goals.size() == 4);
    REQUIRE(schedule.change_points.size() == 3);
    for (std::size_t s = 1; s < schedule.goals.size(); ++s)
      CHECK(schedule.goals[s] != schedule.goals[s - 1]);
    int prev = 0;
    for (const int point : schedule.change_points) {
      CHECK(point > prev);
      CHECK(point < config.episodes_per_trial);
      prev = point;
    }
  }
}

TEST_CASE("oracle replay earns the goal reward in 2d+2 actions") {
  const CtGraph env = make_env();
  OracleReplayController oracle(env);
  oracle.begin_trial();
  for (int goal = 0; goal < env.num_end_states(); ++goal) {
    oracle.begin_episode(goal);
    const EpisodeTrace trace = run_episode(env, goal, oracle, 8, false);
    CHECK(trace.total_reward == 1.0);
    CHECK(trace.goal_found);
    CHECK(trace.num_actions() == 6);
    CHECK_FALSE(trace.truncated);
    // Terminal entry processes the end image without acting.
    REQUIRE(trace.steps.size() == 7);
    CHECK(trace.steps.back().phase == Phase::End);
    CHECK_FALSE(trace.steps.back().action.has_value());
    // Bookkeeping identity.
    double sum = 0.0;
    for (const auto& step : trace.steps) sum += step.reward;
    CHECK(sum == trace.total_reward);
  }
}

TEST_CASE("a constant-wait controller crashes at the first decision") {
  const CtGraph env = make_env();
  ConstantController wait_forever(kActionWait);
  const EpisodeTrace trace = run_episode(env, 0, wait_forever, 8, false);
  CHECK(trace.num_actions() == 3);  // start ok, wait ok, wrong wait at decision
  CHECK(trace.steps.size() == 3);   // no terminal entry after a crash
  CHECK(trace.steps.back().phase == Phase::Decision);
  CHECK(trace.total_reward == env.config().crash_reward);
  CHECK_FALSE(trace.goal_found);
}

TEST_CASE("max_steps cuts an episode off and flags it") {
  const CtGraph env = make_env();
  OracleReplayController oracle(env);
  oracle.begin_episode(0);
  const EpisodeTrace trace = run_episode(env, 0, oracle, 3, false);
  CHECK(trace.truncated);
  CHECK(trace.num_actions() == 3);
  CHECK(trace.total_reward == 0.0);
}

TEST_CASE("plastic weights persist across episodes and reset per trial") {
  const CtGraph env = make_env();
  const auto& features = shared_pipeline();

  // Hand genome with guaranteed plasticity: an always-on modulatory neuron
  // gates the input->output weight.
  Genome genome;
  genome.num_inputs = static_cast<std::uint32_t>(features.autoencoder.latent_dim());
  const std::uint32_t out = genome.num_inputs, mod = genome.num_inputs + 1;
  genome.neurons = {{out, NeuronKind::Standard}, {mod, NeuronKind::Modulatory}};
  genome.output_id = out;
  genome.connections = {{0, out, 0.5}, {0, mod, 1.0}, {mod, out, 1.0}};
  genome.rule = {1.0, 0.8, 0.3, 0.2, 0.1};

  PlasticNetController controller(genome, features);
  controller.begin_trial();
  const std::vector<double> genome_weights = controller.state().live_weights;

  controller.begin_episode(0);
  run_episode(env, 0, controller, 8, false);
  const std::vector<double> after_ep1 = controller.state().live_weights;
  CHECK(after_ep1 != genome_weights);  // learning actually happened

  controller.begin_episode(1);  // activation reset must keep the weights
  CHECK(controller.state().live_weights == after_ep1);
  for (const double a : controller.state().a_std) CHECK(a == 0.0);
  for (const double a : controller.state().a_mod) CHECK(a == 0.0);

  controller.begin_trial();  // trial start restores the genome weights
  CHECK(controller.state().live_weights == genome_weights);
}

TEST_CASE("run_trial wires schedules, episodes and rewards together") {
  const CtGraph env = make_env();
  TrialConfig config;
  config.num_tasks = 1;
  OracleReplayController oracle(env);
  Rng rng(3);
  const TrialResult result = run_trial(env, config, oracle, rng);
  CHECK(result.trial_reward == 100.0);
  CHECK(result.episodes.size() == 100);
  CHECK(result.change_points.empty());
  double sum = 0.0;
  for (const auto& episode : result.episodes) sum += episode.total_reward;
  CHECK(sum == result.trial_reward);
}

TEST_CASE("evaluate_controller provides the oracle upper bound") {
  const CtGraph env = make_env();
  const TrialConfig config;
  OracleReplayController oracle(env);
  CHECK(evaluate_controller(env, config, oracle, 99) == 100.0);
}

TEST_CASE("a silent genome always picks choice 1 and crashes at start") {
  const CtGraph env = make_env();
  const auto& features = shared_pipeline();
  Genome genome;
  genome.num_inputs = static_cast<std::uint32_t>(features.autoencoder.latent_dim());
  genome.neurons = {{genome.num_inputs, NeuronKind::Standard}};
  genome.output_id = genome.num_inputs;

  CHECK(evaluate_fitness(genome, env, TrialConfig{}, features, 5) == 0.0);

  CtGraphConfig punishing = env.config();
  punishing.crash_reward = -0.25;
  const CtGraph harsh(punishing);
  CHECK(evaluate_fitness(genome, harsh, TrialConfig{}, features, 5) ==
        doctest::Approx(-25.0).epsilon(1e-12));
}

TEST_CASE("fitness is deterministic given genome and seeds") {
  const CtGraph env = make_env();
  const auto& features = shared_pipeline();
  Rng rng(8);
  const Genome genome = make_seed_genome(
      static_cast<std::uint32_t>(features.autoencoder.latent_dim()), rng);
  const LatentTable table = LatentTable::build(env, features);

  const double a = evaluate_fitness(genome, env, TrialConfig{}, features, 1234, &table);
  const double b = evaluate_fitness(genome, env, TrialConfig{}, features, 1234, &table);
  const double without_cache = evaluate_fitness(genome, env, TrialConfig{}, features, 1234);
  CHECK(a == b);
  CHECK(a == without_cache);
  // Different seeds are allowed to differ (stochastic schedules).
  const double other = evaluate_fitness(genome, env, TrialConfig{}, features, 4321);
  (void)other;
}

TEST_CASE("recorded activations have one row per step and live in (-1,1)") {
  const CtGraph env = make_env();
  const auto& features = shared_pipeline();
  Rng rng(8);
  const Genome genome = make_seed_genome(
      static_cast<std::uint32_t>(features.autoencoder.latent_dim()), rng);
  PlasticNetController controller(genome, features);
  controller.begin_trial();
  controller.begin_episode(0);
  const EpisodeTrace trace = run_episode(env, 0, controller, 8, true);
  REQUIRE(!trace.steps.empty());
  for (const auto& step : trace.steps) {
    CHECK(step.a_std.size() == 3);
    CHECK(step.a_mod.size() == 3);
    for (const double a : step.a_std) {
      CHECK(a > -1.0);
      CHECK(a < 1.0);
    }
  }
}

TEST_CASE("trial csv exports round-trip the row counts") {
  const CtGraph env = make_env();
  TrialConfig config;
  config.episodes_per_trial = 10;
  config.change_lo = 2;
  config.change_hi = 5;
  OracleReplayController oracle(env);
  Rng rng(12);
  std::vector<TrialResult> trials = {run_trial(env, config, oracle, rng),
                                     run_trial(env, config, oracle, rng)};

  const auto dir = std::filesystem::temp_directory_path();
  const auto episodes_path = (dir / "evoplast_episodes.csv").string();
  const auto steps_path = (dir / "evoplast_steps.csv").string();
  write_episodes_csv(trials, episodes_path);
  write_steps_csv(trials, steps_path);

  const auto episode_rows = read_csv(episodes_path);
  CHECK(episode_rows.size() == 1 + 2 * 10);
  CHECK(episode_rows[0] ==
        std::vector<std::string>{"trial", "episode", "goal", "reward", "length"});
  std::size_t step_count = 0;
  for (const auto& trial : trials)
    for (const auto& episode : trial.episodes) step_count += episode.steps.size();
  CHECK(read_csv(steps_path).size() == 1 + step_count);
  std::remove(episodes_path.c_str());
  std::remove(steps_path.c_str());
}
