#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace evoplast {

enum class NeuronKind { Standard, Modulatory };

struct NeuronGene {
  std::uint32_t id = 0;  // ids < num_inputs are reserved for inputs
  NeuronKind kind = NeuronKind::Standard;
};

struct ConnectionGene {
  std::uint32_t pre = 0;   // input id or neuron id
  std::uint32_t post = 0;  // neuron id
  double weight = 0.0;     // in [-1, 1]
};

// Global Hebbian rule coefficients:
//   dw = alpha * (a * pre * post + b * pre + c * post + d)
// applied to a connection scaled by the post-synaptic modulatory activation.
struct PlasticityRule {
  double alpha = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
};

// Evolvable controller specification. Inputs are implicit sources with ids
// 0..num_inputs-1 and behave as standard-type neurons whose activation is the
// current input value.
struct Genome {
  std::uint32_t num_inputs = 16;
  std::vector<NeuronGene> neurons;
  std::vector<ConnectionGene> connections;
  PlasticityRule rule;
  std::uint32_t output_id = 0;

  // Smallest id not yet taken by an input or neuron.
  std::uint32_t next_neuron_id() const;
};

// Checks all genome invariants (ids resolve, output is a standard neuron,
// no duplicate connections, weights within [-1,1]). Throws std::invalid_argument.
void validate(const Genome& genome);

// Runtime state of a controller. Weights start from the genome and drift
// under the plasticity rule; activations live in (-1, 1).
struct NetworkState {
  std::vector<double> a_std;
  std::vector<double> a_mod;
  std::vector<double> live_weights;  // aligned with Genome::connections
  std::vector<double> input;         // input vector seen by the last propagate

  std::vector<double> next_std_;  // double buffers for the synchronous update
  std::vector<double> next_mod_;
};

// Genome compiled into index-based wiring for fast stepping. The genome's
// neuron order defines the dense index space used by NetworkState.
class CompiledNet {
 public:
  explicit CompiledNet(const Genome& genome);

  NetworkState init_state() const;

  // One synchronous update: every neuron recomputes its standard activation
  // from standard-type sources and its modulatory activation from modulatory
  // sources, all reading the previous step's activations (inputs are read at
  // their current values). Returns the output neuron's standard activation.
  double propagate(NetworkState& state, std::span<const double> input) const;

  // Applies the neuromodulated Hebbian rule to every connection whose source
  // is an input or a standard neuron, then clamps live weights to [-1, 1].
  // Connections leaving modulatory neurons stay at their genome weights.
  void hebbian_update(NetworkState& state) const;

  int num_neurons() const { return static_cast<int>(neuron_ids_.size()); }
  int num_inputs() const { return static_cast<int>(num_inputs_); }
  std::size_t output_index() const { return output_index_; }
  const std::vector<std::uint32_t>& neuron_ids() const { return neuron_ids_; }

 private:
  struct Source {
    bool from_input = false;
    std::uint32_t index = 0;  // input slot or dense neuron index
  };
  struct Wire {
    Source pre;
    std::uint32_t post = 0;
    bool plastic = false;
  };

  double source_value(const NetworkState& state, const Source& src) const;

  std::uint32_t num_inputs_ = 0;
  std::vector<std::uint32_t> neuron_ids_;
  std::vector<Wire> wires_;                             // one per genome connection
  std::vector<std::vector<std::uint32_t>> std_in_;      // wire indices per neuron
  std::vector<std::vector<std::uint32_t>> mod_in_;
  std::size_t output_index_ = 0;
  PlasticityRule rule_;
};

// [-1,-0.33) -> choice 1, [-0.33,0.33] -> wait, (0.33,1] -> choice 2.
int discretize_action(double output_activation);

std::string genome_to_json(const Genome& genome);
Genome genome_from_json(const std::string& text);
void save_genome(const Genome& genome, const std::string& path);
Genome load_genome(const std::string& path);

}  // namespace evoplast
