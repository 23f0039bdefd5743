#pragma once

#include <cstdint>
#include <vector>

#include "cignn/baselines.hpp"
#include "cignn/data.hpp"
#include "cignn/graph.hpp"
#include "cignn/model.hpp"
#include "cignn/training.hpp"

namespace cignn {

// ===== Graph assembly =====

/// How per-graph adjacency matrices are derived.
struct GraphSettings {
    enum class Mode { kSpatial, kRelational };

    Mode mode = Mode::kRelational;
    double sigma = 0.0;           // spatial kernel width; 0 = off-diagonal distance std
    double kappa = 0.0;           // spatial cutoff; 0 = off-diagonal distance std
    std::size_t dcca_window = 4;  // relational correlation window
};

/// One adjacency per graph.  Spatial mode reads each graph's coordinates
/// file (every graph must have one); relational mode correlates the
/// segment's node series.  Pass the training segment so held-out data never
/// shapes the graph.  A spatial graph whose distances all exceed the cutoff
/// comes back all-zero with a stderr warning.
std::vector<AdjacencyMatrix> build_adjacencies(const GraphCollection& segment,
                                               const GraphSettings& settings);

// ===== Experiment assembly =====

/// Everything that defines a training/evaluation run apart from the dataset
/// and the optimizer: sample geometry, model size, and graph derivation.
struct ExperimentPlan {
    std::size_t window = 6;
    std::size_t horizon = 3;
    std::size_t cheb_order = 1;
    std::size_t hidden_channels = 32;
    bool use_fusion = true;
    GraphSettings graph;
    SplitRatios ratios;
};

/// A dataset made ready to train and evaluate on: split, normalized,
/// windowed, with graph operators derived from the training segment.
struct Experiment {
    ModelArch arch;
    SplitCollections split;  // raw segments
    NormStats stats;
    std::vector<AdjacencyMatrix> adjacencies;
    std::vector<std::vector<Tensor>> bases;  // per graph, cheb_order matrices
    TrainData data;                          // normalized train/validation windows
};

/// Deterministically derives an Experiment from a collection and a plan.
Experiment prepare_experiment(const GraphCollection& collection, const ExperimentPlan& plan);

// ===== Fusion ablation =====

/// One trained model of an ablation: its seed, training log, full test
/// report, and the headline number (target graph, all horizons, original
/// units).
struct AblationArm {
    std::uint64_t seed = 0;
    TrainLog log;
    ForecastReport report;
    double test_mae = 0.0;
};

struct AblationResult {
    std::vector<AblationArm> with_fusion;     // aligned by seed with
    std::vector<AblationArm> without_fusion;  // ... this one
    double median_with = 0.0;
    double median_without = 0.0;
};

/// Trains one model pair per seed — identical initialization and data
/// order, cross-graph messages on versus off — and scores each on the test
/// segment.  Needs at least two graphs; with one graph there is nothing to
/// fuse.  `config.seed` is ignored in favor of `seeds`.
AblationResult ablate_fusion(const GraphCollection& collection, const ExperimentPlan& plan,
                             const TrainConfig& config, const std::vector<std::uint64_t>& seeds);

}  // namespace cignn
