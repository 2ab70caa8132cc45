#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evoplast/ctgraph.hpp"

namespace evoplast {

// Fully connected autoencoder, ReLU on every layer. Default shape is
// 144-64-16-64-144 with the 16-wide bottleneck as the latent code.
struct AutoencoderParams {
  std::vector<int> layer_sizes;
  // weights[l] has shape (layer_sizes[l+1] x layer_sizes[l]), row-major.
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int encoder_layers() const { return num_layers() / 2; }
  int input_dim() const { return layer_sizes.front(); }
  int latent_dim() const { return layer_sizes[encoder_layers()]; }

  void validate() const;  // throws std::invalid_argument on shape mismatch
};

std::vector<int> default_layer_sizes();

// Weights uniform in [-s, s] with s = 0.25*sqrt(6/(fan_in+fan_out)), biases 0.1.
AutoencoderParams make_autoencoder(const std::vector<int>& layer_sizes, std::uint64_t seed);

std::vector<double> reconstruct(const AutoencoderParams& params, std::span<const double> input);
std::vector<double> encode(const AutoencoderParams& params, std::span<const double> input);

// Squared L2 reconstruction residual per observation, averaged over samples.
double mse_loss(const AutoencoderParams& params, const std::vector<Observation>& dataset);

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  double loss = 0.0;
};

// Analytic full-batch gradients of mse_loss.
Gradients compute_gradients(const AutoencoderParams& params,
                            const std::vector<Observation>& dataset);

struct TrainResult {
  AutoencoderParams params;
  std::vector<double> epoch_loss;  // mse after each epoch
  double final_loss = 0.0;
};

// Full-batch vanilla SGD.
TrainResult train_autoencoder(const std::vector<Observation>& dataset, double learning_rate,
                              int epochs, std::uint64_t init_seed,
                              const std::vector<int>& layer_sizes = default_layer_sizes());

// Every distinct image the environment can emit, each repeated `replicas` times.
std::vector<Observation> collect_observations(const CtGraph& env, int replicas = 1);

// Per-feature min/max over a latent dataset.
struct LatentScaler {
  std::vector<double> min;
  std::vector<double> max;

  void validate() const;
};

LatentScaler fit_scaler(const std::vector<std::vector<double>>& latents);

struct TransformedLatent {
  std::vector<double> values;  // all in [0,1]
};

// Min-max scaling (degenerate features pin to 0.5) followed by the clamped
// inverse sigmoid log(v/(1-v)): results above 1 saturate to 1, below 0 to 0.
TransformedLatent transform(const LatentScaler& scaler, std::span<const double> latent);

// Frozen feature extractor handed to controllers: encode then transform.
struct FeaturePipeline {
  AutoencoderParams autoencoder;
  LatentScaler scaler;

  TransformedLatent process(const Observation& obs) const;
};

void save_features(const FeaturePipeline& pipeline, const std::string& path);
FeaturePipeline load_features(const std::string& path);

}  // namespace evoplast
