#pragma once

// Shared test fixtures: a quickly trained feature pipeline and hand-built
// probe genomes whose neurons respond to chosen environment images.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "evoplast/ctgraph.hpp"
#include "evoplast/features.hpp"
#include "evoplast/neuromod.hpp"

namespace fixtures {

inline evoplast::FeaturePipeline train_pipeline(const evoplast::CtGraph& env, int epochs,
                                                std::uint64_t seed) {
  const auto dataset = evoplast::collect_observations(env);
  const auto trained = evoplast::train_autoencoder(dataset, 0.001, epochs, seed);
  std::vector<std::vector<double>> latents;
  for (const auto& obs : dataset) latents.push_back(evoplast::encode(trained.params, obs.pixels));
  return {trained.params, evoplast::fit_scaler(latents)};
}

// Minimum-norm solution of T w = y (rows of T are the transformed latents),
// via the 5x5 system (T T^T + lambda I) alpha = y, w = T^T alpha.
inline std::vector<double> solve_min_norm(const std::vector<std::vector<double>>& rows,
                                          const std::vector<double>& targets,
                                          double lambda = 1e-9) {
  const std::size_t m = rows.size();
  const std::size_t dim = rows.front().size();
  std::vector<std::vector<double>> gram(m, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += rows[i][k] * rows[j][k];
      gram[i][j] = dot + (i == j ? lambda : 0.0);
    }
    gram[i][m] = targets[i];
  }
  // Gaussian elimination with partial pivoting.
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::fabs(gram[r][col]) > std::fabs(gram[pivot][col])) pivot = r;
    std::swap(gram[col], gram[pivot]);
    if (std::fabs(gram[col][col]) < 1e-14)
      throw std::runtime_error("probe fixture: transformed latents are degenerate");
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = gram[r][col] / gram[col][col];
      for (std::size_t c = col; c <= m; ++c) gram[r][c] -= f * gram[col][c];
    }
  }
  std::vector<double> alpha(m);
  for (std::size_t i = 0; i < m; ++i) alpha[i] = gram[i][m] / gram[i][i];

  std::vector<double> w(dim, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < dim; ++k) w[k] += alpha[i] * rows[i][k];
  return w;
}

struct ProbeGenome {
  evoplast::Genome genome;
  std::uint32_t output_id = 0;
  std::uint32_t location_neuron_id = 0;  // responds to the decision image
  std::uint32_t cue_neuron_id = 0;       // +/- response to end goal / no-goal images
};

// A static genome (no modulation) whose output waits at wait states and picks
// choice 1 at decisions, so every episode reaches end state 0. Two probe
// neurons are wired straight to the inputs with least-squares weights.
inline ProbeGenome make_probe_genome(const evoplast::CtGraph& env,
                                     const evoplast::FeaturePipeline& features) {
  using namespace evoplast;
  const std::vector<std::vector<double>> codes = {
      features.process(env.observation_for(Phase::Start)).values,
      features.process(env.observation_for(Phase::Wait)).values,
      features.process(env.observation_for(Phase::Decision)).values,
      features.process(env.observation_for(Phase::End, true)).values,
      features.process(env.observation_for(Phase::End, false)).values,
  };
  const auto num_inputs = static_cast<std::uint32_t>(codes.front().size());

  ProbeGenome probe;
  probe.output_id = num_inputs;
  probe.location_neuron_id = num_inputs + 1;
  probe.cue_neuron_id = num_inputs + 2;

  Genome& genome = probe.genome;
  genome.num_inputs = num_inputs;
  genome.neurons = {{probe.output_id, NeuronKind::Standard},
                    {probe.location_neuron_id, NeuronKind::Standard},
                    {probe.cue_neuron_id, NeuronKind::Standard}};
  genome.output_id = probe.output_id;
  genome.rule = {};  // alpha 0: fully static network

  // Pre-tanh sums per image: [start, wait, decision, end_goal, end_nogoal].
  const auto wire = [&](std::uint32_t post, const std::vector<double>& sums) {
    auto weights = solve_min_norm(codes, sums);
    double peak = 1.0;
    for (const double w : weights) peak = std::max(peak, std::fabs(w));
    for (std::uint32_t i = 0; i < num_inputs; ++i)
      genome.connections.push_back({i, post, weights[i] / peak});
  };
  wire(probe.output_id, {-6.0, -6.0, 0.0, -6.0, -6.0});       // wait, wait, choice1
  wire(probe.location_neuron_id, {0.0, 0.0, 4.0, 0.0, 0.0});  // decision detector
  wire(probe.cue_neuron_id, {0.0, 0.0, 0.0, 4.0, -4.0});      // cue detector

  validate(genome);
  return probe;
}

}  // namespace fixtures
