#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "evoplast/neuromod.hpp"
#include "evoplast/rng.hpp"
#include "support/reference_net.hpp"

using namespace evoplast;

namespace {

// 1 input -> 1 standard output neuron.
Genome single_neuron_genome(double weight) {
  Genome genome;
  genome.num_inputs = 1;
  genome.neurons = {{1, NeuronKind::Standard}};
  genome.connections = {{0, 1, weight}};
  genome.output_id = 1;
  return genome;
}

}  // namespace

TEST_CASE("genome validation catches broken invariants") {
  Genome ok = single_neuron_genome(0.5);
  CHECK_NOTHROW(validate(ok));

  Genome bad = ok;
  bad.neurons[0].kind = NeuronKind::Modulatory;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);  // output must be standard

  bad = ok;
  bad.connections.push_back({0, 1, 0.1});
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);  // duplicate pair

  bad = ok;
  bad.connections[0].pre = 7;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);  // unresolved id

  bad = ok;
  bad.connections[0].weight = 1.5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);  // weight range

  bad = ok;
  bad.neurons.push_back({0, NeuronKind::Standard});
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);  // id collides with inputs

  bad = ok;
  bad.output_id = 9;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("init_state starts at zero activations and genome weights") {
  const Genome genome = single_neuron_genome(0.25);
  const CompiledNet net(genome);
  const NetworkState a = net.init_state();
  CHECK(a.a_std == std::vector<double>{0.0});
  CHECK(a.a_mod == std::vector<double>{0.0});
  CHECK(a.live_weights == std::vector<double>{0.25});
  const NetworkState b = net.init_state();
  CHECK(a.live_weights == b.live_weights);
  CHECK(a.a_std == b.a_std);
}

TEST_CASE("propagate implements the halved tanh sum") {
  const CompiledNet net(single_neuron_genome(1.0));
  NetworkState state = net.init_state();
  const double out = net.propagate(state, std::vector<double>{1.0});
  CHECK(out == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  CHECK(state.a_mod[0] == 0.0);  // no modulatory sources: empty sum

  // All-zero input from a zero state stays at zero.
  NetworkState zero = net.init_state();
  CHECK(net.propagate(zero, std::vector<double>{0.0}) == 0.0);

  CHECK_THROWS_AS(net.propagate(state, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("hebbian update is gated by the post-synaptic modulatory activation") {
  Genome genome = single_neuron_genome(0.0);
  genome.rule = {1.0, 1.0, 0.0, 0.0, 0.0};  // alpha=1, A=1
  const CompiledNet net(genome);
  NetworkState state = net.init_state();

  // a_mod zero everywhere: no change.
  state.input = {1.0};
  state.a_std = {1.0};
  state.a_mod = {0.0};
  net.hebbian_update(state);
  CHECK(state.live_weights[0] == 0.0);

  // Full modulation with pre=post=1 adds alpha*A = 1.
  state.a_mod = {1.0};
  net.hebbian_update(state);
  CHECK(state.live_weights[0] == 1.0);
}

TEST_CASE("live weights clamp to [-1, 1]") {
  Genome genome = single_neuron_genome(0.95);
  genome.rule = {1.0, 0.0, 0.0, 0.0, 0.2};  // delta = D = 0.2
  const CompiledNet net(genome);
  NetworkState state = net.init_state();
  state.input = {0.0};
  state.a_std = {0.0};
  state.a_mod = {1.0};
  net.hebbian_update(state);
  CHECK(state.live_weights[0] == 1.0);  // 0.95 + 0.2 clamps
}

TEST_CASE("discretize_action maps the paper intervals") {
  CHECK(discretize_action(-0.5) == 0);
  CHECK(discretize_action(0.0) == 1);
  CHECK(discretize_action(-0.33) == 1);
  CHECK(discretize_action(0.33) == 1);
  CHECK(discretize_action(0.34) == 2);
  CHECK(discretize_action(-0.99) == 0);
  CHECK(discretize_action(0.99) == 2);
}

TEST_CASE("propagate and hebbian_update match the straight-line reference") {
  Rng rng(20240817);
  double max_dev = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto num_inputs = static_cast<std::uint32_t>(rng.uniform_int(2, 6));
    const Genome genome = refnet::random_genome(rng, num_inputs, 10);
    const CompiledNet net(genome);
    NetworkState state = net.init_state();
    refnet::RefState ref = refnet::ref_init(genome);

    for (int step = 0; step < 12; ++step) {
      std::vector<double> input(num_inputs);
      for (auto& v : input) v = rng.uniform(0.0, 1.0);
      const double out = net.propagate(state, input);
      const double ref_out = refnet::ref_propagate(genome, ref, input);
      max_dev = std::max(max_dev, std::fabs(out - ref_out));
      net.hebbian_update(state);
      refnet::ref_hebbian(genome, ref, input);

      for (std::size_t c = 0; c < genome.connections.size(); ++c) {
        const auto& conn = genome.connections[c];
        max_dev = std::max(max_dev, std::fabs(state.live_weights[c] -
                                              ref.weights.at({conn.pre, conn.post})));
      }
      for (std::size_t i = 0; i < net.neuron_ids().size(); ++i) {
        max_dev = std::max(max_dev,
                           std::fabs(state.a_std[i] - ref.a_std.at(net.neuron_ids()[i])));
        max_dev = std::max(max_dev,
                           std::fabs(state.a_mod[i] - ref.a_mod.at(net.neuron_ids()[i])));
      }
    }
  }
  CHECK(max_dev <= 1e-12);
}

TEST_CASE("activations stay strictly inside (-1, 1)") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Genome genome = refnet::random_genome(rng, 4, 10);
    const CompiledNet net(genome);
    NetworkState state = net.init_state();
    for (int step = 0; step < 50; ++step) {
      std::vector<double> input = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
      net.propagate(state, input);
      net.hebbian_update(state);
      for (const double a : state.a_std) {
        CHECK(a > -1.0);
        CHECK(a < 1.0);
      }
      for (const double a : state.a_mod) {
        CHECK(a > -1.0);
        CHECK(a < 1.0);
      }
      for (const double w : state.live_weights) {
        CHECK(w >= -1.0);
        CHECK(w <= 1.0);
      }
    }
  }
}

TEST_CASE("a genome without modulatory neurons keeps its weights bitwise") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Genome genome = refnet::random_genome(rng, 3, 8);
    for (auto& neuron : genome.neurons) neuron.kind = NeuronKind::Standard;
    const CompiledNet net(genome);
    NetworkState state = net.init_state();
    const std::vector<double> frozen = state.live_weights;
    for (int step = 0; step < 200; ++step) {
      std::vector<double> input = {rng.uniform(), rng.uniform(), rng.uniform()};
      net.propagate(state, input);
      net.hebbian_update(state);
    }
    CHECK(state.live_weights == frozen);
  }
}

TEST_CASE("dynamics are deterministic") {
  Rng rng(5);
  const Genome genome = refnet::random_genome(rng, 4, 8);
  const CompiledNet net(genome);
  NetworkState a = net.init_state();
  NetworkState b = net.init_state();
  for (int step = 0; step < 30; ++step) {
    const std::vector<double> input = {0.1 * step, 0.5, 0.9, 0.2};
    CHECK(net.propagate(a, input) == net.propagate(b, input));
    net.hebbian_update(a);
    net.hebbian_update(b);
  }
  CHECK(a.live_weights == b.live_weights);
}

TEST_CASE("genome JSON round-trip is lossless") {
  Rng rng(9001);
  for (int trial = 0; trial < 20; ++trial) {
    const Genome genome = refnet::random_genome(rng, 5, 9);
    const Genome back = genome_from_json(genome_to_json(genome));
    REQUIRE(back.neurons.size() == genome.neurons.size());
    REQUIRE(back.connections.size() == genome.connections.size());
    CHECK(back.num_inputs == genome.num_inputs);
    CHECK(back.output_id == genome.output_id);
    CHECK(back.rule.alpha == genome.rule.alpha);
    CHECK(back.rule.a == genome.rule.a);
    CHECK(back.rule.b == genome.rule.b);
    CHECK(back.rule.c == genome.rule.c);
    CHECK(back.rule.d == genome.rule.d);
    for (std::size_t i = 0; i < genome.connections.size(); ++i) {
      CHECK(back.connections[i].pre == genome.connections[i].pre);
      CHECK(back.connections[i].post == genome.connections[i].post);
      CHECK(back.connections[i].weight == genome.connections[i].weight);
    }
    for (std::size_t i = 0; i < genome.neurons.size(); ++i) {
      CHECK(back.neurons[i].id == genome.neurons[i].id);
      CHECK(back.neurons[i].kind == genome.neurons[i].kind);
    }
  }
  CHECK_THROWS_AS(genome_from_json("{not json"), std::runtime_error);
  CHECK_THROWS_AS(genome_from_json("{\"version\": 99}"), std::runtime_error);
}
