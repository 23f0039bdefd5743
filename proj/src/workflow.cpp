#include "cignn/workflow.hpp"

#include <algorithm>
#include <iostream>
#include <utility>

#include "cignn/errors.hpp"

namespace cignn {

// ===== Graph assembly =====

namespace {

AdjacencyMatrix spatial_adjacency(const GraphSpec& spec, const GraphSignal& signal,
                                  const GraphSettings& settings) {
    if (spec.coordinates_path.empty()) {
        throw ConfigError("graph '" + spec.id +
                          "' has no coordinates file; spatial adjacency needs one "
                          "(or use relational mode)");
    }
    const Tensor coordinates = load_coordinates(spec.coordinates_path, signal.node_ids);
    const Tensor distances = pairwise_distances(coordinates);
    const double fallback = default_kernel_width(distances);
    const double sigma = settings.sigma > 0 ? settings.sigma : fallback;
    const double kappa = settings.kappa > 0 ? settings.kappa : fallback;
    AdjacencyMatrix adjacency = gaussian_kernel_adjacency(distances, sigma, kappa);
    const bool all_zero = std::all_of(adjacency.values.data(),
                                      adjacency.values.data() + adjacency.values.size(),
                                      [](double v) { return v == 0.0; });
    if (all_zero) {
        std::cerr << "warning: graph '" << spec.id << "': every node pair lies beyond the cutoff "
                  << kappa << "; adjacency is all zero\n";
    }
    return adjacency;
}

/// Correlation adjacency of one graph: per-feature coefficient matrices
/// (negatives already clipped) averaged over the feature axis.
AdjacencyMatrix relational_adjacency(const GraphSignal& signal, const GraphSettings& settings) {
    const std::size_t steps = signal.length();
    const std::size_t nodes = signal.node_count();
    const std::size_t features = signal.feature_count();
    Tensor mean({nodes, nodes});
    std::vector<std::vector<double>> series(nodes, std::vector<double>(steps));
    for (std::size_t p = 0; p < features; ++p) {
        for (std::size_t n = 0; n < nodes; ++n) {
            for (std::size_t t = 0; t < steps; ++t) {
                series[n][t] = signal.values.at3(t, n, p);
            }
        }
        const AdjacencyMatrix part = relational_matrix(series, settings.dcca_window);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += part.values[i] / static_cast<double>(features);
        }
    }
    return make_adjacency(std::move(mean), AdjacencyMatrix::Kind::kRelational);
}

}  // namespace

std::vector<AdjacencyMatrix> build_adjacencies(const GraphCollection& segment,
                                               const GraphSettings& settings) {
    std::vector<AdjacencyMatrix> out;
    out.reserve(segment.graph_count());
    for (std::size_t g = 0; g < segment.graph_count(); ++g) {
        if (settings.mode == GraphSettings::Mode::kSpatial) {
            out.push_back(spatial_adjacency(segment.specs[g], segment.signals[g], settings));
        } else {
            out.push_back(relational_adjacency(segment.signals[g], settings));
        }
    }
    return out;
}

// ===== Experiment assembly =====

Experiment prepare_experiment(const GraphCollection& collection, const ExperimentPlan& plan) {
    SplitCollections split = chronological_split(collection, plan.window, plan.horizon, plan.ratios);
    NormStats stats = NormStats::from_split(split);

    std::vector<AdjacencyMatrix> adjacencies = build_adjacencies(split.train, plan.graph);
    std::vector<std::vector<Tensor>> bases;
    bases.reserve(adjacencies.size());
    for (const AdjacencyMatrix& adjacency : adjacencies) {
        bases.push_back(build_laplacian_bundle(adjacency, plan.cheb_order).cheb_basis);
    }

    ModelArch arch;
    for (const GraphSignal& signal : collection.signals) {
        arch.nodes.push_back(signal.node_count());
        arch.features.push_back(signal.feature_count());
    }
    arch.hidden_channels = plan.hidden_channels;
    arch.cheb_order = plan.cheb_order;
    arch.window = plan.window;
    arch.horizon = plan.horizon;
    arch.use_fusion = plan.use_fusion;
    arch.validate();

    TrainData data;
    data.train = make_windows(stats.normalize(split.train), plan.window, plan.horizon);
    data.validation = make_windows(stats.normalize(split.validation), plan.window, plan.horizon);

    return Experiment{std::move(arch),        std::move(split), std::move(stats),
                      std::move(adjacencies), std::move(bases), std::move(data)};
}

// ===== Fusion ablation =====

namespace {

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) {
        return values[n / 2];
    }
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

AblationResult ablate_fusion(const GraphCollection& collection, const ExperimentPlan& plan,
                             const TrainConfig& config, const std::vector<std::uint64_t>& seeds) {
    if (collection.graph_count() < 2) {
        throw ConfigError("fusion ablation needs at least two graphs, got " +
                          std::to_string(collection.graph_count()));
    }
    if (seeds.empty()) {
        throw ConfigError("fusion ablation needs at least one seed");
    }
    config.validate();

    const Experiment experiment = prepare_experiment(collection, plan);

    AblationResult result;
    for (std::uint64_t seed : seeds) {
        for (bool fusion : {true, false}) {
            ModelArch arch = experiment.arch;
            arch.use_fusion = fusion;
            TrainConfig arm_config = config;
            arm_config.seed = seed;
            TrainResult trained = train_model(arch, arm_config, experiment.bases, experiment.data);
            ForecastReport report = evaluate_model(trained.params, experiment.bases,
                                                   experiment.split.test, experiment.stats);
            const double test_mae = report.target().overall.mae;
            std::cerr << "ablation: seed " << seed << ", fusion " << (fusion ? "on" : "off")
                      << ": test MAE " << test_mae << "\n";
            AblationArm arm{seed, std::move(trained.log), std::move(report), test_mae};
            (fusion ? result.with_fusion : result.without_fusion).push_back(std::move(arm));
        }
    }

    std::vector<double> with_maes;
    std::vector<double> without_maes;
    for (const AblationArm& arm : result.with_fusion) {
        with_maes.push_back(arm.test_mae);
    }
    for (const AblationArm& arm : result.without_fusion) {
        without_maes.push_back(arm.test_mae);
    }
    result.median_with = median_of(std::move(with_maes));
    result.median_without = median_of(std::move(without_maes));
    return result;
}

}  // namespace cignn
