#include "evoplast/neuromod.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "evoplast/csv.hpp"

namespace evoplast {

namespace {
constexpr int kGenomeSchemaVersion = 1;
}

std::uint32_t Genome::next_neuron_id() const {
  std::uint32_t next = num_inputs;
  for (const auto& n : neurons) next = std::max(next, n.id + 1);
  return next;
}

void validate(const Genome& genome) {
  if (genome.num_inputs == 0) throw std::invalid_argument("genome has no inputs");

  std::unordered_map<std::uint32_t, NeuronKind> kinds;
  for (const auto& neuron : genome.neurons) {
    if (neuron.id < genome.num_inputs)
      throw std::invalid_argument("neuron id collides with input id range");
    if (!kinds.emplace(neuron.id, neuron.kind).second)
      throw std::invalid_argument("duplicate neuron id " + std::to_string(neuron.id));
  }

  const auto out = kinds.find(genome.output_id);
  if (out == kinds.end())
    throw std::invalid_argument("output_id does not name a neuron");
  if (out->second != NeuronKind::Standard)
    throw std::invalid_argument("output neuron must be standard");

  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const auto& conn : genome.connections) {
    const bool pre_is_input = conn.pre < genome.num_inputs;
    if (!pre_is_input && kinds.find(conn.pre) == kinds.end())
      throw std::invalid_argument("connection pre id " + std::to_string(conn.pre) +
                                  " does not resolve");
    if (kinds.find(conn.post) == kinds.end())
      throw std::invalid_argument("connection post id " + std::to_string(conn.post) +
                                  " does not resolve");
    if (!seen.emplace(conn.pre, conn.post).second)
      throw std::invalid_argument("duplicate connection " + std::to_string(conn.pre) + "->" +
                                  std::to_string(conn.post));
    if (!(conn.weight >= -1.0 && conn.weight <= 1.0))
      throw std::invalid_argument("connection weight outside [-1, 1]");
  }
}

CompiledNet::CompiledNet(const Genome& genome) {
  validate(genome);
  num_inputs_ = genome.num_inputs;
  rule_ = genome.rule;

  std::unordered_map<std::uint32_t, std::uint32_t> index_of;
  neuron_ids_.reserve(genome.neurons.size());
  std::vector<NeuronKind> kind_of(genome.neurons.size());
  for (std::uint32_t i = 0; i < genome.neurons.size(); ++i) {
    index_of[genome.neurons[i].id] = i;
    neuron_ids_.push_back(genome.neurons[i].id);
    kind_of[i] = genome.neurons[i].kind;
  }
  output_index_ = index_of.at(genome.output_id);

  std_in_.assign(genome.neurons.size(), {});
  mod_in_.assign(genome.neurons.size(), {});
  wires_.reserve(genome.connections.size());
  for (std::uint32_t c = 0; c < genome.connections.size(); ++c) {
    const auto& conn = genome.connections[c];
    Wire wire;
    wire.post = index_of.at(conn.post);
    if (conn.pre < num_inputs_) {
      wire.pre = {true, conn.pre};
      wire.plastic = true;
    } else {
      const std::uint32_t pre_idx = index_of.at(conn.pre);
      wire.pre = {false, pre_idx};
      wire.plastic = kind_of[pre_idx] == NeuronKind::Standard;
    }
    if (wire.pre.from_input || kind_of[wire.pre.index] == NeuronKind::Standard)
      std_in_[wire.post].push_back(c);
    else
      mod_in_[wire.post].push_back(c);
    wires_.push_back(wire);
  }
}

NetworkState CompiledNet::init_state() const {
  NetworkState state;
  state.a_std.assign(neuron_ids_.size(), 0.0);
  state.a_mod.assign(neuron_ids_.size(), 0.0);
  state.live_weights.resize(wires_.size());
  state.input.assign(num_inputs_, 0.0);
  state.next_std_.assign(neuron_ids_.size(), 0.0);
  state.next_mod_.assign(neuron_ids_.size(), 0.0);
  return state;
}

double CompiledNet::source_value(const NetworkState& state, const Source& src) const {
  return src.from_input ? state.input[src.index] : state.a_std[src.index];
}

double CompiledNet::propagate(NetworkState& state, std::span<const double> input) const {
  if (input.size() != num_inputs_)
    throw std::invalid_argument("propagate: input size does not match genome num_inputs");
  std::copy(input.begin(), input.end(), state.input.begin());

  for (std::size_t i = 0; i < neuron_ids_.size(); ++i) {
    double std_sum = 0.0;
    for (const std::uint32_t c : std_in_[i])
      std_sum += state.live_weights[c] * source_value(state, wires_[c].pre);
    state.next_std_[i] = std::tanh(0.5 * std_sum);

    double mod_sum = 0.0;
    for (const std::uint32_t c : mod_in_[i])
      mod_sum += state.live_weights[c] * state.a_std[wires_[c].pre.index];
    state.next_mod_[i] = std::tanh(0.5 * mod_sum);
  }
  state.a_std.swap(state.next_std_);
  state.a_mod.swap(state.next_mod_);
  return state.a_std[output_index_];
}

void CompiledNet::hebbian_update(NetworkState& state) const {
  for (std::size_t c = 0; c < wires_.size(); ++c) {
    const Wire& wire = wires_[c];
    if (!wire.plastic) continue;
    const double mod = state.a_mod[wire.post];
    if (mod == 0.0) continue;
    const double pre = source_value(state, wire.pre);
    const double post = state.a_std[wire.post];
    const double dw =
        rule_.alpha * (rule_.a * pre * post + rule_.b * pre + rule_.c * post + rule_.d);
    state.live_weights[c] = std::clamp(state.live_weights[c] + mod * dw, -1.0, 1.0);
  }
}

// Interval-to-action assignment puts the wait action on the middle band, so
// a quiet network waits instead of crashing into the first wall; the two
// saturated bands carry the branch choices.
int discretize_action(double output_activation) {
  if (output_activation < -0.33) return 1;
  if (output_activation <= 0.33) return 0;
  return 2;
}

namespace {

std::string kind_name(NeuronKind kind) {
  return kind == NeuronKind::Standard ? "standard" : "modulatory";
}

NeuronKind kind_from_name(const std::string& name) {
  if (name == "standard") return NeuronKind::Standard;
  if (name == "modulatory") return NeuronKind::Modulatory;
  throw std::runtime_error("unknown neuron kind: " + name);
}

}  // namespace

std::string genome_to_json(const Genome& genome) {
  nlohmann::json doc;
  doc["version"] = kGenomeSchemaVersion;
  doc["num_inputs"] = genome.num_inputs;
  doc["output_id"] = genome.output_id;
  doc["rule"] = {{"alpha", genome.rule.alpha}, {"a", genome.rule.a}, {"b", genome.rule.b},
                 {"c", genome.rule.c},         {"d", genome.rule.d}};
  doc["neurons"] = nlohmann::json::array();
  for (const auto& neuron : genome.neurons)
    doc["neurons"].push_back({{"id", neuron.id}, {"kind", kind_name(neuron.kind)}});
  doc["connections"] = nlohmann::json::array();
  for (const auto& conn : genome.connections)
    doc["connections"].push_back(
        {{"pre", conn.pre}, {"post", conn.post}, {"weight", conn.weight}});
  return doc.dump(2) + "\n";
}

Genome genome_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("cannot parse genome: ") + e.what());
  }
  if (doc.value("version", 0) != kGenomeSchemaVersion)
    throw std::runtime_error("unsupported genome schema version");
  Genome genome;
  try {
    genome.num_inputs = doc.at("num_inputs").get<std::uint32_t>();
    genome.output_id = doc.at("output_id").get<std::uint32_t>();
    const auto& rule = doc.at("rule");
    genome.rule.alpha = rule.at("alpha").get<double>();
    genome.rule.a = rule.at("a").get<double>();
    genome.rule.b = rule.at("b").get<double>();
    genome.rule.c = rule.at("c").get<double>();
    genome.rule.d = rule.at("d").get<double>();
    for (const auto& n : doc.at("neurons"))
      genome.neurons.push_back(
          {n.at("id").get<std::uint32_t>(), kind_from_name(n.at("kind").get<std::string>())});
    for (const auto& c : doc.at("connections"))
      genome.connections.push_back({c.at("pre").get<std::uint32_t>(),
                                    c.at("post").get<std::uint32_t>(),
                                    c.at("weight").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed genome document: ") + e.what());
  }
  validate(genome);
  return genome;
}

void save_genome(const Genome& genome, const std::string& path) {
  write_text_file(path, genome_to_json(genome));
}

Genome load_genome(const std::string& path) {
  try {
    return genome_from_json(read_text_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot load genome " + path + ": " + e.what());
  }
}

}  // namespace evoplast
