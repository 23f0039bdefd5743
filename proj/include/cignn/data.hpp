#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cignn/tensor.hpp"

namespace cignn {

// ===== Dataset model =====
//
// A dataset is a collection of graphs observed over a shared, evenly spaced
// time axis.  Exactly one graph is the forecast target; the others provide
// context.  Each graph carries a (T, N_i, P_i) value tensor, its node ids,
// and its feature names.  All graphs share the same timestamps.

struct GraphSpec {
    std::string id;
    bool is_target = false;
    std::vector<std::string> feature_names;
    // Empty when the manifest supplies no coordinates for this graph.
    std::filesystem::path coordinates_path;
};

struct GraphSignal {
    std::string graph_id;
    Tensor values;  // (T, N, P)
    std::vector<std::string> node_ids;
    std::vector<std::string> feature_names;

    std::size_t length() const { return values.shape()[0]; }
    std::size_t node_count() const { return values.shape()[1]; }
    std::size_t feature_count() const { return values.shape()[2]; }
};

struct GraphCollection {
    std::vector<GraphSpec> specs;
    std::vector<GraphSignal> signals;  // aligned with specs
    std::vector<std::int64_t> timestamps;
    std::int64_t interval_seconds = 0;
    // Number of steps in one seasonal period (used by the historical-average
    // baseline).  Zero means "not specified".
    std::size_t period_steps = 0;

    std::size_t graph_count() const { return signals.size(); }
    std::size_t length() const { return timestamps.size(); }
    std::size_t target_index() const;
};

// ===== Loading =====

// Reads a manifest JSON file and loads every referenced series CSV.
// The manifest names each graph, its role ("target" or "context"), one CSV
// per feature, and optionally a coordinates CSV.  Relative paths resolve
// against the manifest's directory.  Throws ParseError for malformed files,
// DataError for misaligned or inconsistent series.
GraphCollection load_collection(const std::filesystem::path& manifest_path);

// Reads a coordinates CSV (header: node-id,x,y) and returns an (N, 2) tensor
// with rows ordered to match `node_ids`.  Throws DataError when the file does
// not cover exactly the given node set.
Tensor load_coordinates(const std::filesystem::path& path,
                        const std::vector<std::string>& node_ids);

// ===== Writing =====

// Writes one CSV per (graph, feature) plus coordinate files and a manifest
// into `directory`, creating it if needed.  Returns the manifest path.
// The output round-trips through load_collection exactly.
std::filesystem::path write_collection(const GraphCollection& collection,
                                       const std::filesystem::path& directory,
                                       const std::vector<Tensor>& coordinates = {});

// ===== Chronological split =====

struct SplitRatios {
    double train = 0.7;
    double validation = 0.1;
    double test = 0.2;
};

struct SplitCollections {
    GraphCollection train;
    GraphCollection validation;
    GraphCollection test;
};

// Splits the time axis into consecutive train / validation / test segments.
// Boundaries fall at floor(cumulative ratio * T).  Every segment must hold at
// least window + horizon steps so that it yields one sample; otherwise a
// DataError reports which segment is too short.
SplitCollections chronological_split(const GraphCollection& collection,
                                     std::size_t window, std::size_t horizon,
                                     const SplitRatios& ratios = {});

// ===== Windowing =====

struct WindowedSample {
    std::vector<Tensor> inputs;   // per graph: (window, N, P)
    std::vector<Tensor> targets;  // per graph: (horizon, N, P)
    // Index (within the segment) and timestamp of the last input step.
    std::size_t origin_index = 0;
    std::int64_t origin_timestamp = 0;
};

// Slides a window of `window` input steps followed by `horizon` target steps
// over the segment with stride 1, producing T - window - horizon + 1 samples.
std::vector<WindowedSample> make_windows(const GraphCollection& segment,
                                         std::size_t window, std::size_t horizon);

// ===== Normalization =====

// Per-node, per-feature z-score statistics.  The factory takes the full split
// but reads only the train segment, so statistics cannot leak from validation
// or test data.  Nodes whose training series is constant pass through
// unchanged (mean 0, scale 1) and are reported on stderr.
class NormStats {
  public:
    static NormStats from_split(const SplitCollections& split);

    // Normalizes / denormalizes a (steps, N, P) tensor for one graph.
    Tensor normalize_values(std::size_t graph, const Tensor& values) const;
    Tensor denormalize_values(std::size_t graph, const Tensor& values) const;

    // Applies normalize_values to every signal of a collection.
    GraphCollection normalize(const GraphCollection& collection) const;

    std::size_t graph_count() const { return mean_.size(); }
    const Tensor& mean(std::size_t graph) const { return mean_.at(graph); }
    const Tensor& scale(std::size_t graph) const { return scale_.at(graph); }

  private:
    NormStats() = default;
    std::vector<Tensor> mean_;   // per graph: (N, P)
    std::vector<Tensor> scale_;  // per graph: (N, P), strictly positive
};

// ===== Synthetic data =====

// Generates an M-graph collection (one target + M-1 contexts) of length T
// with `nodes` nodes per graph and one feature each.  The target mixes a
// daily periodic profile, spatially smoothed autoregressive noise, and
// `coupling` times a bounded transform of the previous step's context state.
// The context series and every random draw are independent of `coupling`, so
// two collections generated with the same seed and different couplings differ
// only in the target graph's values.  Deterministic for a given seed.
GraphCollection synthesize_coupled(std::uint64_t seed, std::size_t graph_count,
                                   std::size_t nodes, std::size_t length,
                                   double coupling);

// Line-layout coordinates (node i at (i, 0)) matching synthesize_coupled's
// node sets, one (nodes, 2) tensor per graph.
std::vector<Tensor> synthetic_coordinates(std::size_t graph_count, std::size_t nodes);

}  // namespace cignn
