#include "evoplast/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "evoplast/csv.hpp"
#include "evoplast/rng.hpp"

namespace evoplast {

namespace {

constexpr int kFeaturesSchemaVersion = 1;
constexpr double kSigmoidClamp = 1e-6;

double relu(double x) { return x > 0.0 ? x : 0.0; }
double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

// Pre-activations and activations for every layer; activations[0] is the input.
struct ForwardPass {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
};

ForwardPass forward_all(const AutoencoderParams& params, std::span<const double> input) {
  ForwardPass fp;
  fp.act.emplace_back(input.begin(), input.end());
  for (int l = 0; l < params.num_layers(); ++l) {
    const int in_dim = params.layer_sizes[l];
    const int out_dim = params.layer_sizes[l + 1];
    const auto& w = params.weights[l];
    const auto& b = params.biases[l];
    const auto& prev = fp.act.back();
    std::vector<double> pre(out_dim);
    for (int o = 0; o < out_dim; ++o) {
      double sum = b[o];
      const double* row = w.data() + static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) sum += row[i] * prev[i];
      pre[o] = sum;
    }
    std::vector<double> act(out_dim);
    for (int o = 0; o < out_dim; ++o) act[o] = relu(pre[o]);
    fp.pre.push_back(std::move(pre));
    fp.act.push_back(std::move(act));
  }
  return fp;
}

}  // namespace

void AutoencoderParams::validate() const {
  if (layer_sizes.size() < 3 || layer_sizes.size() % 2 == 0)
    throw std::invalid_argument("layer_sizes must list an odd number (>= 3) of layer widths");
  if (layer_sizes.front() != layer_sizes.back())
    throw std::invalid_argument("autoencoder input and output widths differ");
  for (int size : layer_sizes)
    if (size < 1) throw std::invalid_argument("layer sizes must be positive");
  if (weights.size() != static_cast<std::size_t>(num_layers()) ||
      biases.size() != static_cast<std::size_t>(num_layers()))
    throw std::invalid_argument("weights/biases count does not match layer_sizes");
  for (int l = 0; l < num_layers(); ++l) {
    const auto expected_w = static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1];
    if (weights[l].size() != expected_w)
      throw std::invalid_argument("weight matrix " + std::to_string(l) + " has wrong shape");
    if (biases[l].size() != static_cast<std::size_t>(layer_sizes[l + 1]))
      throw std::invalid_argument("bias vector " + std::to_string(l) + " has wrong shape");
  }
}

std::vector<int> default_layer_sizes() { return {144, 64, 16, 64, 144}; }

AutoencoderParams make_autoencoder(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  AutoencoderParams params;
  params.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (int l = 0; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    // Quarter-scale symmetric init. At full Glorot scale the early epochs
    // push a chunk of the all-ReLU output layer permanently dark on this
    // tiny dataset, flooring the loss far above the convergence ceiling.
    const double s = 0.25 * std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
    for (auto& v : w) v = rng.uniform(-s, s);
    params.weights.push_back(std::move(w));
    // Small positive bias keeps ReLU units alive at the start; a unit that
    // goes dark on every sample of a fixed dataset never recovers.
    params.biases.emplace_back(fan_out, 0.1);
  }
  params.validate();
  return params;
}

std::vector<double> reconstruct(const AutoencoderParams& params, std::span<const double> input) {
  if (static_cast<int>(input.size()) != params.input_dim())
    throw std::invalid_argument("input size does not match autoencoder input width");
  return forward_all(params, input).act.back();
}

std::vector<double> encode(const AutoencoderParams& params, std::span<const double> input) {
  if (static_cast<int>(input.size()) != params.input_dim())
    throw std::invalid_argument("input size does not match autoencoder input width");
  std::vector<double> current(input.begin(), input.end());
  for (int l = 0; l < params.encoder_layers(); ++l) {
    const int in_dim = params.layer_sizes[l];
    const int out_dim = params.layer_sizes[l + 1];
    std::vector<double> next(out_dim);
    for (int o = 0; o < out_dim; ++o) {
      double sum = params.biases[l][o];
      const double* row = params.weights[l].data() + static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) sum += row[i] * current[i];
      next[o] = relu(sum);
    }
    current = std::move(next);
  }
  return current;
}

// (1/n) sum_i ||reconstruction(o_i) - o_i||^2: squared L2 residual per
// observation, averaged over the dataset.
double mse_loss(const AutoencoderParams& params, const std::vector<Observation>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("mse_loss: empty dataset");
  double total = 0.0;
  for (const auto& obs : dataset) {
    const auto out = reconstruct(params, obs.pixels);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double diff = out[i] - obs.pixels[i];
      total += diff * diff;
    }
  }
  return total / static_cast<double>(dataset.size());
}

Gradients compute_gradients(const AutoencoderParams& params,
                            const std::vector<Observation>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("compute_gradients: empty dataset");
  Gradients grads;
  grads.weights.reserve(params.num_layers());
  grads.biases.reserve(params.num_layers());
  for (int l = 0; l < params.num_layers(); ++l) {
    grads.weights.emplace_back(params.weights[l].size(), 0.0);
    grads.biases.emplace_back(params.biases[l].size(), 0.0);
  }

  const double scale = 1.0 / static_cast<double>(dataset.size());
  for (const auto& obs : dataset) {
    const ForwardPass fp = forward_all(params, obs.pixels);
    const auto& out = fp.act.back();

    // dL/d(activation) of the output layer.
    std::vector<double> delta(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      delta[i] = 2.0 * (out[i] - obs.pixels[i]) * scale;

    for (int l = params.num_layers() - 1; l >= 0; --l) {
      const int in_dim = params.layer_sizes[l];
      const int out_dim = params.layer_sizes[l + 1];
      // Through the ReLU.
      for (int o = 0; o < out_dim; ++o) delta[o] *= relu_grad(fp.pre[l][o]);

      const auto& prev_act = fp.act[l];
      auto& gw = grads.weights[l];
      auto& gb = grads.biases[l];
      for (int o = 0; o < out_dim; ++o) {
        gb[o] += delta[o];
        double* row = gw.data() + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) row[i] += delta[o] * prev_act[i];
      }

      if (l > 0) {
        std::vector<double> next_delta(in_dim, 0.0);
        const auto& w = params.weights[l];
        for (int o = 0; o < out_dim; ++o) {
          const double* row = w.data() + static_cast<std::size_t>(o) * in_dim;
          for (int i = 0; i < in_dim; ++i) next_delta[i] += row[i] * delta[o];
        }
        delta = std::move(next_delta);
      }
    }

    for (std::size_t i = 0; i < out.size(); ++i) {
      const double diff = out[i] - obs.pixels[i];
      grads.loss += diff * diff * scale;
    }
  }
  return grads;
}

TrainResult train_autoencoder(const std::vector<Observation>& dataset, double learning_rate,
                              int epochs, std::uint64_t init_seed,
                              const std::vector<int>& layer_sizes) {
  if (dataset.empty()) throw std::invalid_argument("train_autoencoder: empty dataset");
  if (epochs < 0) throw std::invalid_argument("train_autoencoder: negative epoch count");

  TrainResult result;
  result.params = make_autoencoder(layer_sizes, init_seed);
  result.epoch_loss.reserve(epochs);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const Gradients grads = compute_gradients(result.params, dataset);
    for (int l = 0; l < result.params.num_layers(); ++l) {
      auto& w = result.params.weights[l];
      const auto& gw = grads.weights[l];
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * gw[i];
      auto& b = result.params.biases[l];
      const auto& gb = grads.biases[l];
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= learning_rate * gb[i];
    }
    result.epoch_loss.push_back(mse_loss(result.params, dataset));
  }
  result.final_loss = result.epoch_loss.empty() ? mse_loss(result.params, dataset)
                                                : result.epoch_loss.back();
  return result;
}

std::vector<Observation> collect_observations(const CtGraph& env, int replicas) {
  if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  const std::vector<Observation> distinct = {
      env.observation_for(Phase::Start),    env.observation_for(Phase::Wait),
      env.observation_for(Phase::Decision), env.observation_for(Phase::End, true),
      env.observation_for(Phase::End, false), env.observation_for(Phase::Crash),
  };
  std::vector<Observation> dataset;
  dataset.reserve(distinct.size() * replicas);
  for (int r = 0; r < replicas; ++r)
    dataset.insert(dataset.end(), distinct.begin(), distinct.end());
  return dataset;
}

void LatentScaler::validate() const {
  if (min.size() != max.size()) throw std::invalid_argument("scaler min/max size mismatch");
  for (std::size_t i = 0; i < min.size(); ++i)
    if (min[i] > max[i]) throw std::invalid_argument("scaler has min > max");
}

LatentScaler fit_scaler(const std::vector<std::vector<double>>& latents) {
  if (latents.size() < 2) throw std::invalid_argument("fit_scaler needs at least 2 latents");
  const std::size_t dim = latents.front().size();
  LatentScaler scaler;
  scaler.min.assign(dim, std::numeric_limits<double>::infinity());
  scaler.max.assign(dim, -std::numeric_limits<double>::infinity());
  for (const auto& latent : latents) {
    if (latent.size() != dim) throw std::invalid_argument("fit_scaler: ragged latents");
    for (std::size_t i = 0; i < dim; ++i) {
      scaler.min[i] = std::min(scaler.min[i], latent[i]);
      scaler.max[i] = std::max(scaler.max[i], latent[i]);
    }
  }
  return scaler;
}

TransformedLatent transform(const LatentScaler& scaler, std::span<const double> latent) {
  if (latent.size() != scaler.min.size())
    throw std::invalid_argument("transform: latent size does not match scaler");
  TransformedLatent out;
  out.values.resize(latent.size());
  for (std::size_t i = 0; i < latent.size(); ++i) {
    const double lo = scaler.min[i];
    const double hi = scaler.max[i];
    double v;
    if (hi > lo) {
      const double x = std::clamp(latent[i], lo, hi);
      v = (x - lo) / (hi - lo);
    } else {
      v = 0.5;  // uninformative feature, sits at the transform's zero point
    }
    v = std::clamp(v, kSigmoidClamp, 1.0 - kSigmoidClamp);
    const double s = std::log(v / (1.0 - v));
    out.values[i] = s > 1.0 ? 1.0 : (s < 0.0 ? 0.0 : s);
  }
  return out;
}

TransformedLatent FeaturePipeline::process(const Observation& obs) const {
  return transform(scaler, encode(autoencoder, obs.pixels));
}

void save_features(const FeaturePipeline& pipeline, const std::string& path) {
  pipeline.autoencoder.validate();
  pipeline.scaler.validate();
  nlohmann::json doc;
  doc["version"] = kFeaturesSchemaVersion;
  doc["layer_sizes"] = pipeline.autoencoder.layer_sizes;
  doc["weights"] = pipeline.autoencoder.weights;
  doc["biases"] = pipeline.autoencoder.biases;
  doc["scaler"]["min"] = pipeline.scaler.min;
  doc["scaler"]["max"] = pipeline.scaler.max;
  write_text_file(path, doc.dump(2) + "\n");
}

FeaturePipeline load_features(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse features file " + path + ": " + e.what());
  }
  if (doc.value("version", 0) != kFeaturesSchemaVersion)
    throw std::runtime_error("unsupported features schema version in " + path);
  FeaturePipeline pipeline;
  try {
    pipeline.autoencoder.layer_sizes = doc.at("layer_sizes").get<std::vector<int>>();
    pipeline.autoencoder.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
    pipeline.autoencoder.biases = doc.at("biases").get<std::vector<std::vector<double>>>();
    pipeline.scaler.min = doc.at("scaler").at("min").get<std::vector<double>>();
    pipeline.scaler.max = doc.at("scaler").at("max").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed features file " + path + ": " + e.what());
  }
  pipeline.autoencoder.validate();
  pipeline.scaler.validate();
  if (static_cast<int>(pipeline.scaler.min.size()) != pipeline.autoencoder.latent_dim())
    throw std::runtime_error("scaler width does not match latent width in " + path);
  return pipeline;
}

}  // namespace evoplast
