#include "cignn/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "cignn/errors.hpp"
#include "cignn/rng.hpp"

namespace cignn {
namespace {

constexpr std::size_t kTensorsPerGraph = 9;  // 3 filters + 3 x (weight, bias)
constexpr const char* kCheckpointFormat = "cignn-checkpoint";
constexpr int kCheckpointVersion = 1;

const char* gate_name(Gate gate) {
    switch (gate) {
        case Gate::kReset: return "reset";
        case Gate::kUpdate: return "update";
        case Gate::kCandidate: return "candidate";
    }
    throw Error("unknown gate");
}

}  // namespace

// ===== Architecture =====

void ModelArch::validate() const {
    if (nodes.empty()) {
        throw ConfigError("arch: need at least one graph");
    }
    if (nodes.size() != features.size()) {
        throw ConfigError("arch: " + std::to_string(nodes.size()) + " node counts but " +
                          std::to_string(features.size()) + " feature counts");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i] == 0 || features[i] == 0) {
            throw ConfigError("arch: graph " + std::to_string(i) +
                              " needs at least one node and one feature");
        }
    }
    if (hidden_channels == 0 || cheb_order == 0 || window == 0 || horizon == 0) {
        throw ConfigError(
            "arch: hidden channels, filter order, window, and horizon must be at least 1");
    }
}

void require_same_arch(const ModelArch& expected, const ModelArch& actual) {
    std::ostringstream diffs;
    const auto mismatch = [&diffs](const char* field, std::size_t a, std::size_t b) {
        if (a != b) {
            diffs << "; " << field << " " << a << " vs " << b;
        }
    };
    if (expected.nodes != actual.nodes || expected.features != actual.features) {
        diffs << "; graph shapes differ";
    }
    mismatch("graphs", expected.graph_count(), actual.graph_count());
    mismatch("hidden-channels", expected.hidden_channels, actual.hidden_channels);
    mismatch("cheb-order", expected.cheb_order, actual.cheb_order);
    mismatch("window", expected.window, actual.window);
    mismatch("horizon", expected.horizon, actual.horizon);
    if (expected.use_fusion != actual.use_fusion) {
        diffs << "; use-fusion differs";
    }
    const std::string text = diffs.str();
    if (!text.empty()) {
        throw ConfigError("architecture mismatch" + text);
    }
}

// ===== Parameter layout =====

std::size_t ParamLayout::theta(std::size_t graph, Gate gate) const {
    return graph * kTensorsPerGraph + static_cast<std::size_t>(gate);
}

std::size_t ParamLayout::layer_weight(std::size_t graph, Gate gate) const {
    return graph * kTensorsPerGraph + 3 + 2 * static_cast<std::size_t>(gate);
}

std::size_t ParamLayout::layer_bias(std::size_t graph, Gate gate) const {
    return layer_weight(graph, gate) + 1;
}

std::size_t ParamLayout::fusion_weight(std::size_t receiver, std::size_t sender) const {
    if (receiver == sender || receiver >= graphs || sender >= graphs) {
        throw DimensionError("fusion pair (" + std::to_string(receiver) + ", " +
                             std::to_string(sender) + ") is not valid for " +
                             std::to_string(graphs) + " graphs");
    }
    const std::size_t slot = receiver * (graphs - 1) + (sender > receiver ? sender - 1 : sender);
    return graphs * kTensorsPerGraph + 2 * slot;
}

std::size_t ParamLayout::fusion_bias(std::size_t receiver, std::size_t sender) const {
    return fusion_weight(receiver, sender) + 1;
}

std::size_t ParamLayout::shared_readout() const {
    return graphs * kTensorsPerGraph + 2 * graphs * (graphs - 1);
}

std::size_t ParamLayout::horizon_readout(std::size_t step) const {
    if (step >= horizon) {
        throw DimensionError("readout step " + std::to_string(step) + " out of range for " +
                             std::to_string(horizon) + " horizon steps");
    }
    return shared_readout() + 1 + step;
}

std::size_t ParamLayout::count() const { return shared_readout() + 1 + horizon; }

// ===== Parameters =====

ModelParams::ModelParams(const ModelArch& arch) : arch_(arch) {
    arch.validate();
    const ParamLayout layout(arch);
    values_.resize(layout.count());
    names_.resize(layout.count());
    const std::size_t r = arch.hidden_channels;
    for (std::size_t g = 0; g < arch.graph_count(); ++g) {
        const std::string prefix = "g" + std::to_string(g);
        for (const Gate gate : {Gate::kReset, Gate::kUpdate, Gate::kCandidate}) {
            values_[layout.theta(g, gate)] = Tensor({arch.cheb_order});
            names_[layout.theta(g, gate)] = prefix + ".filter." + gate_name(gate);
            values_[layout.layer_weight(g, gate)] = Tensor({r, r + 1});
            names_[layout.layer_weight(g, gate)] =
                prefix + ".layer." + gate_name(gate) + ".weight";
            values_[layout.layer_bias(g, gate)] = Tensor({r});
            names_[layout.layer_bias(g, gate)] = prefix + ".layer." + gate_name(gate) + ".bias";
        }
    }
    for (std::size_t i = 0; i < arch.graph_count(); ++i) {
        for (std::size_t j = 0; j < arch.graph_count(); ++j) {
            if (i == j) {
                continue;
            }
            const std::string pair = "fusion.g" + std::to_string(j) + "_to_g" + std::to_string(i);
            values_[layout.fusion_weight(i, j)] =
                Tensor({arch.nodes[j], arch.features[j], arch.features[i], arch.nodes[i]});
            names_[layout.fusion_weight(i, j)] = pair + ".weight";
            values_[layout.fusion_bias(i, j)] = Tensor({arch.nodes[i], arch.features[i]});
            names_[layout.fusion_bias(i, j)] = pair + ".bias";
        }
    }
    values_[layout.shared_readout()] = Tensor({r});
    names_[layout.shared_readout()] = "readout.shared";
    for (std::size_t h = 0; h < arch.horizon; ++h) {
        values_[layout.horizon_readout(h)] = Tensor({r});
        names_[layout.horizon_readout(h)] = "readout.step" + std::to_string(h);
    }
}

ModelParams ModelParams::zeros(const ModelArch& arch) { return ModelParams(arch); }

ModelParams ModelParams::init(const ModelArch& arch, std::uint64_t seed) {
    ModelParams params(arch);
    Rng rng(seed);
    const double r = static_cast<double>(arch.hidden_channels);
    // Glorot bounds: the filter sums cheb_order basis applications into one
    // output; the channel layer maps r+1 channels to r.
    const double theta_bound = std::sqrt(6.0 / (static_cast<double>(arch.cheb_order) + 1.0));
    const double layer_bound = std::sqrt(6.0 / (2.0 * r + 1.0));
    const double near_zero = 0.01;
    // The shared readout multiplies into every cross-graph message twice —
    // once collapsing the sender's channels, once lifting the gate back — so
    // a near-zero start would square away the fusion path's early gradients.
    // The channel-balanced scale keeps that path trainable from step one.
    const double shared_bound = 1.0 / std::sqrt(r);

    const ParamLayout layout(arch);
    const auto fill = [&rng](Tensor& tensor, double bound) {
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            tensor.data()[i] = rng.uniform(-bound, bound);
        }
    };
    // Draw order equals registration order, one stream, so every experiment
    // arm with the same architecture shapes sees the same initial values.
    for (std::size_t g = 0; g < arch.graph_count(); ++g) {
        for (const Gate gate : {Gate::kReset, Gate::kUpdate, Gate::kCandidate}) {
            fill(params.at(layout.theta(g, gate)), theta_bound);
            fill(params.at(layout.layer_weight(g, gate)), layer_bound);
            fill(params.at(layout.layer_bias(g, gate)), near_zero);
        }
    }
    for (std::size_t i = 0; i < arch.graph_count(); ++i) {
        for (std::size_t j = 0; j < arch.graph_count(); ++j) {
            if (i == j) {
                continue;
            }
            fill(params.at(layout.fusion_weight(i, j)), near_zero);
            fill(params.at(layout.fusion_bias(i, j)), near_zero);
        }
    }
    fill(params.at(layout.shared_readout()), shared_bound);
    for (std::size_t h = 0; h < arch.horizon; ++h) {
        fill(params.at(layout.horizon_readout(h)), near_zero);
    }
    return params;
}

// ===== Checkpoints =====

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
    const ModelArch& arch = params.arch();
    nlohmann::ordered_json doc;
    doc["format"] = kCheckpointFormat;
    doc["version"] = kCheckpointVersion;
    doc["arch"] = {
        {"nodes", arch.nodes},
        {"features", arch.features},
        {"hidden-channels", arch.hidden_channels},
        {"cheb-order", arch.cheb_order},
        {"window", arch.window},
        {"horizon", arch.horizon},
        {"use-fusion", arch.use_fusion},
    };
    doc["params"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < params.count(); ++i) {
        const Tensor& tensor = params.at(i);
        nlohmann::ordered_json entry;
        entry["name"] = params.name(i);
        entry["shape"] = tensor.shape();
        entry["values"] = std::vector<double>(tensor.data(), tensor.data() + tensor.size());
        doc["params"].push_back(std::move(entry));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write checkpoint " + path.string());
    }
    out << doc.dump(2) << "\n";
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream stream(path);
    if (!stream) {
        throw InputError("cannot open checkpoint " + path.string());
    }
    nlohmann::json doc;
    try {
        stream >> doc;
    } catch (const nlohmann::json::parse_error& err) {
        throw ParseError(path.string() + ": " + err.what());
    }
    try {
        if (doc.at("format").get<std::string>() != kCheckpointFormat) {
            throw ParseError(path.string() + ": not a checkpoint file");
        }
        if (doc.at("version").get<int>() != kCheckpointVersion) {
            throw ParseError(path.string() + ": unsupported checkpoint version");
        }
        const auto& arch_doc = doc.at("arch");
        ModelArch arch;
        arch.nodes = arch_doc.at("nodes").get<std::vector<std::size_t>>();
        arch.features = arch_doc.at("features").get<std::vector<std::size_t>>();
        arch.hidden_channels = arch_doc.at("hidden-channels").get<std::size_t>();
        arch.cheb_order = arch_doc.at("cheb-order").get<std::size_t>();
        arch.window = arch_doc.at("window").get<std::size_t>();
        arch.horizon = arch_doc.at("horizon").get<std::size_t>();
        arch.use_fusion = arch_doc.at("use-fusion").get<bool>();

        ModelParams params = ModelParams::zeros(arch);
        const auto& entries = doc.at("params");
        if (!entries.is_array() || entries.size() != params.count()) {
            throw ParseError(path.string() + ": expected " + std::to_string(params.count()) +
                             " parameter tensors, found " + std::to_string(entries.size()));
        }
        for (std::size_t i = 0; i < params.count(); ++i) {
            const auto& entry = entries.at(i);
            if (entry.at("name").get<std::string>() != params.name(i)) {
                throw ParseError(path.string() + ": parameter " + std::to_string(i) +
                                 " is named \"" + entry.at("name").get<std::string>() +
                                 "\", expected \"" + params.name(i) + "\"");
            }
            Tensor& tensor = params.at(i);
            if (entry.at("shape").get<std::vector<std::size_t>>() != tensor.shape()) {
                throw ParseError(path.string() + ": parameter \"" + params.name(i) +
                                 "\" has the wrong shape");
            }
            const auto values = entry.at("values").get<std::vector<double>>();
            if (values.size() != tensor.size()) {
                throw ParseError(path.string() + ": parameter \"" + params.name(i) +
                                 "\" holds " + std::to_string(values.size()) + " values for " +
                                 std::to_string(tensor.size()) + " slots");
            }
            std::copy(values.begin(), values.end(), tensor.data());
        }
        return params;
    } catch (const nlohmann::json::exception& err) {
        throw ParseError(path.string() + ": " + err.what());
    }
}

// ===== Forward pass =====

BoundParams bind_params(Tape& tape, const ModelParams& params) {
    BoundParams bound;
    bound.vars.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        bound.vars.push_back(tape.leaf(params.at(i)));
    }
    return bound;
}

Var cross_graph_message(Tape& tape, Var weight, Var bias, Var shared_readout, Var state) {
    const Var collapsed = tape.channel_contract(shared_readout, state);
    const Var gate = tape.sigmoid(tape.add(tape.pair_contract(weight, collapsed), bias));
    return tape.channel_outer(shared_readout, gate);
}

namespace {

// Shared gate plumbing: filter the [x ; h] channel stack over the graph's
// node basis, then mix channels down to the hidden width.
Var gate_preactivation(Tape& tape, Var theta, Var weight, Var bias,
                       const std::vector<Tensor>& basis, Var stacked) {
    return tape.channel_fc(weight, bias, tape.poly_filter(theta, basis, stacked));
}

}  // namespace

std::vector<Var> cell_step(Tape& tape, const ModelArch& arch, const BoundParams& bound,
                           const std::vector<std::vector<Tensor>>& bases,
                           const std::vector<Var>& inputs, const std::vector<Var>& states) {
    const std::size_t m = arch.graph_count();
    if (inputs.size() != m || states.size() != m || bases.size() != m) {
        throw DimensionError("cell: arch has " + std::to_string(m) + " graphs, got " +
                             std::to_string(inputs.size()) + " inputs, " +
                             std::to_string(states.size()) + " states, " +
                             std::to_string(bases.size()) + " bases");
    }
    const ParamLayout layout(arch);
    std::vector<Var> blended(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Var x = tape.reshape(inputs[i], {1, arch.nodes[i], arch.features[i]});
        const Var stacked = tape.concat(0, {x, states[i]});
        const auto gate_of = [&](Gate gate, Var stack) {
            return gate_preactivation(tape, bound.vars[layout.theta(i, gate)],
                                      bound.vars[layout.layer_weight(i, gate)],
                                      bound.vars[layout.layer_bias(i, gate)], bases[i], stack);
        };
        const Var reset = tape.sigmoid(gate_of(Gate::kReset, stacked));
        const Var update = tape.sigmoid(gate_of(Gate::kUpdate, stacked));
        const Var damped = tape.concat(0, {x, tape.mul(reset, states[i])});
        const Var candidate = tape.tanh(gate_of(Gate::kCandidate, damped));
        blended[i] = tape.add(tape.mul(update, states[i]),
                              tape.mul(tape.one_minus(update), candidate));
    }
    if (!arch.use_fusion || m == 1) {
        return blended;
    }
    const Var shared = bound.vars[layout.shared_readout()];
    std::vector<Var> next(m);
    for (std::size_t i = 0; i < m; ++i) {
        Var state = blended[i];
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) {
                continue;
            }
            const Var message =
                cross_graph_message(tape, bound.vars[layout.fusion_weight(i, j)],
                                    bound.vars[layout.fusion_bias(i, j)], shared, blended[j]);
            state = tape.add(state, message);
        }
        next[i] = state;
    }
    return next;
}

std::vector<std::vector<Var>> model_forward(Tape& tape, const ModelArch& arch,
                                            const BoundParams& bound,
                                            const std::vector<std::vector<Tensor>>& bases,
                                            const std::vector<Tensor>& window_inputs) {
    arch.validate();
    const std::size_t m = arch.graph_count();
    if (window_inputs.size() != m) {
        throw DimensionError("forward: arch has " + std::to_string(m) + " graphs, got " +
                             std::to_string(window_inputs.size()) + " input windows");
    }
    if (bound.vars.size() != ParamLayout(arch).count()) {
        throw DimensionError("forward: expected " + std::to_string(ParamLayout(arch).count()) +
                             " bound parameters, got " + std::to_string(bound.vars.size()));
    }
    for (std::size_t i = 0; i < m; ++i) {
        const std::vector<std::size_t> want{arch.window, arch.nodes[i], arch.features[i]};
        if (window_inputs[i].shape() != want) {
            throw DimensionError("forward: graph " + std::to_string(i) + " window must be " +
                                 Tensor::shape_string(want) + ", got " +
                                 window_inputs[i].shape_string());
        }
        if (bases[i].size() != arch.cheb_order) {
            throw DimensionError("forward: graph " + std::to_string(i) + " has " +
                                 std::to_string(bases[i].size()) + " basis matrices for filter order " +
                                 std::to_string(arch.cheb_order));
        }
    }

    // Zero initial state; every step folds one observation slice in.
    std::vector<Var> states(m);
    for (std::size_t i = 0; i < m; ++i) {
        states[i] = tape.constant(Tensor({arch.hidden_channels, arch.nodes[i], arch.features[i]}));
    }
    for (std::size_t t = 0; t < arch.window; ++t) {
        std::vector<Var> inputs(m);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t span = arch.nodes[i] * arch.features[i];
            Tensor slice({arch.nodes[i], arch.features[i]});
            const double* src = window_inputs[i].data() + t * span;
            std::copy(src, src + span, slice.data());
            inputs[i] = tape.constant(std::move(slice));
        }
        states = cell_step(tape, arch, bound, bases, inputs, states);
    }

    const ParamLayout layout(arch);
    std::vector<std::vector<Var>> predictions(m, std::vector<Var>(arch.horizon));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t h = 0; h < arch.horizon; ++h) {
            predictions[i][h] =
                tape.channel_contract(bound.vars[layout.horizon_readout(h)], states[i]);
        }
    }
    return predictions;
}

}  // namespace cignn
