#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cignn/autodiff.hpp"
#include "cignn/tensor.hpp"

namespace cignn {

// ===== Architecture =====

/// The three gates of the recurrent cell, in registration order.
enum class Gate : std::size_t { kReset = 0, kUpdate = 1, kCandidate = 2 };

/// Structural description of a multi-graph forecasting model.  The hidden
/// state of graph i is a (hidden_channels, nodes[i], features[i]) tensor; one
/// observation step is a (nodes[i], features[i]) slice of the input window.
struct ModelArch {
    std::vector<std::size_t> nodes;     // per graph
    std::vector<std::size_t> features;  // per graph
    std::size_t hidden_channels = 32;
    std::size_t cheb_order = 1;  // node-filter polynomial terms per gate
    std::size_t window = 6;      // input steps per sample
    std::size_t horizon = 3;     // forecast steps per sample
    bool use_fusion = true;      // exchange cross-graph messages

    std::size_t graph_count() const { return nodes.size(); }
    void validate() const;
    bool operator==(const ModelArch&) const = default;
};

/// Throws ConfigError listing every field in which `actual` differs from
/// `expected` (used when a checkpoint meets a dataset).
void require_same_arch(const ModelArch& expected, const ModelArch& actual);

// ===== Parameter layout =====
//
// All trainable tensors live in one flat list with a fixed registration
// order: for each graph, the filter coefficients and channel layer of the
// reset, update, and candidate gates; then cross-graph weight/bias pairs for
// every ordered (receiver, sender) pair; then the shared channel readout;
// then one readout per horizon step.  Initialization draws in exactly this
// order from a single stream, and the fusion tensors are always present, so
// two models that differ only in `use_fusion` start from identical values.

struct ParamLayout {
    std::size_t graphs = 0;
    std::size_t horizon = 0;

    explicit ParamLayout(const ModelArch& arch)
        : graphs(arch.graph_count()), horizon(arch.horizon) {}

    std::size_t theta(std::size_t graph, Gate gate) const;
    std::size_t layer_weight(std::size_t graph, Gate gate) const;
    std::size_t layer_bias(std::size_t graph, Gate gate) const;
    std::size_t fusion_weight(std::size_t receiver, std::size_t sender) const;
    std::size_t fusion_bias(std::size_t receiver, std::size_t sender) const;
    std::size_t shared_readout() const;
    std::size_t horizon_readout(std::size_t step) const;
    std::size_t count() const;
};

// ===== Parameters =====

class ModelParams {
  public:
    ModelParams() = default;

    /// Zero-valued parameters with the layout's shapes and names.
    static ModelParams zeros(const ModelArch& arch);

    /// Seeded initialization: filter coefficients and channel-layer weights
    /// draw uniformly within the symmetric Glorot bound for their fan-in and
    /// fan-out; biases, cross-graph tensors, and readouts draw within 0.01.
    static ModelParams init(const ModelArch& arch, std::uint64_t seed);

    const ModelArch& arch() const { return arch_; }
    ParamLayout layout() const { return ParamLayout(arch_); }
    std::size_t count() const { return values_.size(); }
    const Tensor& at(std::size_t index) const { return values_.at(index); }
    Tensor& at(std::size_t index) { return values_.at(index); }
    const std::string& name(std::size_t index) const { return names_.at(index); }

  private:
    explicit ModelParams(const ModelArch& arch);  // shapes + names, all zero

    ModelArch arch_;
    std::vector<Tensor> values_;
    std::vector<std::string> names_;
};

// ===== Checkpoints =====

/// Writes parameters plus their architecture as deterministic JSON: the same
/// params always serialize to the same bytes.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);

/// Reads a checkpoint, validating format, architecture consistency, and
/// every tensor's name and shape.  Throws ParseError on malformed or
/// inconsistent files.
ModelParams load_checkpoint(const std::filesystem::path& path);

// ===== Forward pass =====

/// Parameters registered on a tape, aligned with the registration order.
/// Binding on a fresh tape gives the leaves ids 0..count-1.
struct BoundParams {
    std::vector<Var> vars;
};

BoundParams bind_params(Tape& tape, const ModelParams& params);

/// Gate message sent between graphs: collapse the sender state's channel
/// axis with the shared readout, map it through the pair weight, add the
/// bias, squash to (0,1), and lift back to channels:
///   sigmoid(W . (z^T S) + b) (outer) z.
Var cross_graph_message(Tape& tape, Var weight, Var bias, Var shared_readout, Var state);

/// One recurrent update of every graph: per-graph gated state from the
/// node-filtered [x ; h] stack, then cross-graph messages added on top when
/// fusion is enabled.  `inputs[i]` is (N_i, P_i); `states[i]` and the result
/// are (r, N_i, P_i).  `bases[i]` holds the graph's node-filter matrices and
/// must outlive the tape.
std::vector<Var> cell_step(Tape& tape, const ModelArch& arch, const BoundParams& bound,
                           const std::vector<std::vector<Tensor>>& bases,
                           const std::vector<Var>& inputs, const std::vector<Var>& states);

/// Rolls the cell over a window of observations from a zero initial state
/// and reads every horizon step out of the final hidden states:
/// result[i][h] = z_h^T H_i, shape (N_i, P_i).  `window_inputs[i]` is
/// (window, N_i, P_i).
std::vector<std::vector<Var>> model_forward(Tape& tape, const ModelArch& arch,
                                            const BoundParams& bound,
                                            const std::vector<std::vector<Tensor>>& bases,
                                            const std::vector<Tensor>& window_inputs);

}  // namespace cignn
