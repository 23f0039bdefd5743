// Command-line front end: synthesize datasets, derive graphs, train,
// evaluate against baselines, and run the fusion ablation.
//
// Exit codes: 0 success, 2 configuration error, 3 input/data error,
// 4 numeric failure, 1 anything else.  Failures print one machine-readable
// JSON object to stderr: {"error": {"type": ..., "message": ...}}.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cignn/baselines.hpp"
#include "cignn/csv.hpp"
#include "cignn/data.hpp"
#include "cignn/errors.hpp"
#include "cignn/graph.hpp"
#include "cignn/model.hpp"
#include "cignn/plot.hpp"
#include "cignn/threading.hpp"
#include "cignn/training.hpp"
#include "cignn/workflow.hpp"

namespace {

using namespace cignn;
using nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

// ===== Input hashing =====

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read '" + path.string() + "' for hashing");
    }
    std::uint64_t hash = 14695981039346656037ull;
    char buffer[4096];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

/// The manifest plus every data file it references, in listed order.
std::vector<std::filesystem::path> manifest_inputs(const std::filesystem::path& manifest_path) {
    std::vector<std::filesystem::path> inputs = {manifest_path};
    std::ifstream in(manifest_path);
    if (!in) {
        throw InputError("cannot read manifest '" + manifest_path.string() + "'");
    }
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(in);
    } catch (const ordered_json::exception& e) {
        throw ParseError("manifest '" + manifest_path.string() + "': " + e.what());
    }
    const std::filesystem::path base = manifest_path.parent_path();
    if (manifest.contains("graphs") && manifest["graphs"].is_array()) {
        for (const ordered_json& graph : manifest["graphs"]) {
            if (graph.contains("files") && graph["files"].is_array()) {
                for (const ordered_json& file : graph["files"]) {
                    if (file.contains("path") && file["path"].is_string()) {
                        inputs.push_back(base / file["path"].get<std::string>());
                    }
                }
            }
            if (graph.contains("coordinates-path") && graph["coordinates-path"].is_string()) {
                inputs.push_back(base / graph["coordinates-path"].get<std::string>());
            }
        }
    }
    return inputs;
}

// ===== Run metadata =====

/// Deterministic record of what ran: command, effective configuration, tool
/// version, and a content hash per input file.  Deliberately no timestamps,
/// so identical runs leave identical records.
void write_run_metadata(const std::filesystem::path& directory, const std::string& command,
                        const ordered_json& config,
                        const std::vector<std::filesystem::path>& inputs) {
    ordered_json meta;
    meta["command"] = command;
    meta["version"] = kVersion;
    meta["config"] = config;
    ordered_json hashes = ordered_json::object();
    for (const std::filesystem::path& input : inputs) {
        hashes[input.string()] = hex64(fnv1a64_file(input));
    }
    meta["input-hashes"] = hashes;
    std::ofstream out(directory / "run.json", std::ios::binary);
    if (!out) {
        throw InputError("cannot write '" + (directory / "run.json").string() + "'");
    }
    out << meta.dump(2) << "\n";
}

// ===== Shared flag groups =====

struct GraphFlags {
    std::string mode = "relational";
    double sigma = 0.0;
    double kappa = 0.0;
    std::size_t dcca_window = 4;
};

void add_graph_flags(CLI::App* cmd, GraphFlags& flags) {
    cmd->add_option("--mode", flags.mode, "adjacency derivation: spatial or relational")
        ->check(CLI::IsMember({"spatial", "relational"}))
        ->capture_default_str();
    cmd->add_option("--sigma", flags.sigma,
                    "spatial kernel width (0 = off-diagonal distance std)")
        ->capture_default_str();
    cmd->add_option("--kappa", flags.kappa, "spatial distance cutoff (0 = same default as sigma)")
        ->capture_default_str();
    cmd->add_option("--dcca-window", flags.dcca_window, "relational correlation window length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

GraphSettings to_settings(const GraphFlags& flags) {
    GraphSettings settings;
    settings.mode = flags.mode == "spatial" ? GraphSettings::Mode::kSpatial
                                            : GraphSettings::Mode::kRelational;
    settings.sigma = flags.sigma;
    settings.kappa = flags.kappa;
    settings.dcca_window = flags.dcca_window;
    return settings;
}

void graph_config(ordered_json& config, const GraphFlags& flags) {
    config["mode"] = flags.mode;
    config["sigma"] = flags.sigma;
    config["kappa"] = flags.kappa;
    config["dcca-window"] = flags.dcca_window;
}

struct ModelFlags {
    std::size_t window = 6;
    std::size_t horizon = 3;
    std::size_t cheb_order = 1;
    std::size_t neurons = 32;
    bool no_fusion = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
    cmd->add_option("--window", flags.window, "input steps per sample")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--horizon", flags.horizon, "forecast steps per sample")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--cheb-order", flags.cheb_order, "node-filter polynomial terms per gate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--neurons", flags.neurons, "hidden channels per graph")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--no-fusion", flags.no_fusion, "disable cross-graph messages");
}

void model_config(ordered_json& config, const ModelFlags& flags) {
    config["window"] = flags.window;
    config["horizon"] = flags.horizon;
    config["cheb-order"] = flags.cheb_order;
    config["neurons"] = flags.neurons;
    config["fusion"] = !flags.no_fusion;
}

struct TrainFlags {
    double lr = 0.01;
    double decay = 0.1;
    std::size_t decay_every = 10;
    std::size_t epochs = 100;
    std::size_t patience = 10;
    std::size_t batch = 32;
    std::uint64_t seed = 0;
    bool clip_gradients = false;
    double clip_ceiling = 5.0;
};

void add_train_flags(CLI::App* cmd, TrainFlags& flags) {
    cmd->add_option("--lr", flags.lr, "initial learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--decay", flags.decay, "learning-rate decay factor")->capture_default_str();
    cmd->add_option("--decay-every", flags.decay_every, "epochs per decay step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--epochs", flags.epochs, "maximum training epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--patience", flags.patience,
                    "epochs without validation improvement before stopping")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--batch", flags.batch, "samples per gradient step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", flags.seed, "random seed")->capture_default_str();
    cmd->add_flag("--clip-gradients", flags.clip_gradients,
                  "rescale batch gradients to a global-norm ceiling");
    cmd->add_option("--clip-ceiling", flags.clip_ceiling, "global-norm ceiling when clipping")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

TrainConfig to_train_config(const TrainFlags& flags) {
    TrainConfig config;
    config.learning_rate = flags.lr;
    config.decay = flags.decay;
    config.decay_every = flags.decay_every;
    config.max_epochs = flags.epochs;
    config.patience = flags.patience;
    config.batch = flags.batch;
    config.seed = flags.seed;
    config.clip_gradients = flags.clip_gradients;
    config.clip_ceiling = flags.clip_ceiling;
    return config;
}

void train_config_json(ordered_json& config, const TrainFlags& flags) {
    config["lr"] = flags.lr;
    config["decay"] = flags.decay;
    config["decay-every"] = flags.decay_every;
    config["epochs"] = flags.epochs;
    config["patience"] = flags.patience;
    config["batch"] = flags.batch;
    config["seed"] = flags.seed;
    config["clip-gradients"] = flags.clip_gradients;
    config["clip-ceiling"] = flags.clip_ceiling;
}

ExperimentPlan to_plan(const GraphFlags& graph, const ModelFlags& model) {
    ExperimentPlan plan;
    plan.window = model.window;
    plan.horizon = model.horizon;
    plan.cheb_order = model.cheb_order;
    plan.hidden_channels = model.neurons;
    plan.use_fusion = !model.no_fusion;
    plan.graph = to_settings(graph);
    return plan;
}

// ===== synth =====

struct SynthArgs {
    std::filesystem::path out;
    std::uint64_t seed = 0;
    std::size_t graphs = 2;
    std::size_t nodes = 4;
    std::size_t steps = 500;
    double coupling = 0.8;
};

void cmd_synth(const SynthArgs& args) {
    const GraphCollection collection =
        synthesize_coupled(args.seed, args.graphs, args.nodes, args.steps, args.coupling);
    const std::vector<Tensor> coordinates = synthetic_coordinates(args.graphs, args.nodes);
    const std::filesystem::path manifest = write_collection(collection, args.out, coordinates);

    ordered_json config;
    config["seed"] = args.seed;
    config["graphs"] = args.graphs;
    config["nodes"] = args.nodes;
    config["steps"] = args.steps;
    config["coupling"] = args.coupling;
    config["out"] = args.out.string();
    write_run_metadata(args.out, "synth", config, {});

    std::cout << "wrote dataset: " << manifest.string() << "\n";
}

// ===== build-graph =====

struct BuildGraphArgs {
    std::filesystem::path manifest;
    std::filesystem::path out;
    GraphFlags graph;
};

void cmd_build_graph(const BuildGraphArgs& args) {
    const GraphCollection collection = load_collection(args.manifest);
    // The standalone tool derives the graph from the full series it is
    // given; the training workflow restricts itself to the train segment.
    const std::vector<AdjacencyMatrix> adjacencies =
        build_adjacencies(collection, to_settings(args.graph));

    std::filesystem::create_directories(args.out);
    ordered_json summary = ordered_json::array();
    for (std::size_t g = 0; g < adjacencies.size(); ++g) {
        const AdjacencyMatrix& adjacency = adjacencies[g];
        const std::string& id = collection.specs[g].id;
        const std::string filename = id + "_adjacency.csv";
        write_matrix_csv(adjacency.values, args.out / filename);

        const std::size_t n = adjacency.node_count();
        std::size_t edges = 0;
        double degree_min = 0.0;
        double degree_max = 0.0;
        double degree_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double degree = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                degree += adjacency.values.at2(i, j);
                if (j > i && adjacency.values.at2(i, j) > 0.0) {
                    ++edges;
                }
            }
            degree_min = i == 0 ? degree : std::min(degree_min, degree);
            degree_max = i == 0 ? degree : std::max(degree_max, degree);
            degree_sum += degree;
        }
        const SpectrumBounds bounds = estimate_spectrum_bounds(normalized_laplacian(adjacency));

        ordered_json entry;
        entry["graph"] = id;
        entry["nodes"] = n;
        entry["edges"] = edges;
        entry["weighted-degree"] = {{"min", degree_min},
                                    {"mean", degree_sum / static_cast<double>(n)},
                                    {"max", degree_max}};
        entry["laplacian-spectrum"] = {{"min", bounds.lambda_min}, {"max", bounds.lambda_max}};
        entry["adjacency-csv"] = filename;
        summary.push_back(entry);

        std::cout << "graph '" << id << "': " << n << " nodes, " << edges
                  << " edges, weighted degree [" << degree_min << ", " << degree_max
                  << "], laplacian spectrum [" << bounds.lambda_min << ", " << bounds.lambda_max
                  << "]\n";
    }
    std::ofstream file(args.out / "graph_summary.json", std::ios::binary);
    if (!file) {
        throw InputError("cannot write '" + (args.out / "graph_summary.json").string() + "'");
    }
    file << summary.dump(2) << "\n";

    ordered_json config;
    config["manifest"] = args.manifest.string();
    graph_config(config, args.graph);
    config["out"] = args.out.string();
    write_run_metadata(args.out, "build-graph", config, manifest_inputs(args.manifest));
}

// ===== train =====

struct TrainArgs {
    std::filesystem::path manifest;
    std::filesystem::path out;
    GraphFlags graph;
    ModelFlags model;
    TrainFlags train;
};

void cmd_train(const TrainArgs& args) {
    const GraphCollection collection = load_collection(args.manifest);
    const Experiment experiment = prepare_experiment(collection, to_plan(args.graph, args.model));
    const TrainConfig config = to_train_config(args.train);
    const TrainResult result = train_model(experiment.arch, config, experiment.bases,
                                           experiment.data);

    std::filesystem::create_directories(args.out);
    save_checkpoint(result.params, args.out / "checkpoint.json");
    write_train_log_csv(result.log, args.out / "train_log.csv");

    ordered_json meta_config;
    meta_config["manifest"] = args.manifest.string();
    graph_config(meta_config, args.graph);
    model_config(meta_config, args.model);
    train_config_json(meta_config, args.train);
    meta_config["out"] = args.out.string();
    write_run_metadata(args.out, "train", meta_config, manifest_inputs(args.manifest));

    std::cout << "trained " << result.log.epochs.size() << " epochs"
              << (result.log.stopped_early ? " (stopped early)" : "") << "; best epoch "
              << result.log.best_epoch << " with validation MAE " << result.log.best_val_mae
              << "\n";
    std::cout << "checkpoint: " << (args.out / "checkpoint.json").string() << "\n";
    std::cout << "train log: " << (args.out / "train_log.csv").string() << "\n";
}

// ===== evaluate =====

struct EvaluateArgs {
    std::filesystem::path manifest;
    std::filesystem::path checkpoint;
    std::filesystem::path out;  // optional; empty = table only
    GraphFlags graph;
    std::size_t var_lag = 0;
};

void cmd_evaluate(const EvaluateArgs& args) {
    const ModelParams params = load_checkpoint(args.checkpoint);
    const GraphCollection collection = load_collection(args.manifest);

    // Sample geometry and model size come from the checkpoint; only the
    // graph derivation is configurable here.
    ExperimentPlan plan;
    plan.window = params.arch().window;
    plan.horizon = params.arch().horizon;
    plan.cheb_order = params.arch().cheb_order;
    plan.hidden_channels = params.arch().hidden_channels;
    plan.use_fusion = params.arch().use_fusion;
    plan.graph = to_settings(args.graph);
    const Experiment experiment = prepare_experiment(collection, plan);
    require_same_arch(params.arch(), experiment.arch);

    const ForecastReport report =
        evaluate_model(params, experiment.bases, experiment.split.test, experiment.stats);
    const std::vector<BaselineReport> baselines =
        evaluate_baselines(experiment.split, plan.window, plan.horizon, collection.period_steps,
                           args.var_lag);

    std::cout << format_report_table(report, baselines);
    std::cout << "model overall test MAE (target graph): " << report.target().overall.mae << "\n";

    if (!args.out.empty()) {
        std::filesystem::create_directories(args.out);
        write_report_csv(report, baselines, args.out / "report.csv");

        ordered_json config;
        config["manifest"] = args.manifest.string();
        config["checkpoint"] = args.checkpoint.string();
        graph_config(config, args.graph);
        config["var-lag"] = args.var_lag;
        config["out"] = args.out.string();
        std::vector<std::filesystem::path> inputs = manifest_inputs(args.manifest);
        inputs.push_back(args.checkpoint);
        write_run_metadata(args.out, "evaluate", config, inputs);

        std::cout << "report: " << (args.out / "report.csv").string() << "\n";
    }
}

// ===== ablate =====

struct AblateArgs {
    std::filesystem::path manifest;
    std::filesystem::path out;
    GraphFlags graph;
    ModelFlags model;
    TrainFlags train;
    std::size_t seeds = 5;
};

void cmd_ablate(const AblateArgs& args) {
    const GraphCollection collection = load_collection(args.manifest);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < args.seeds; ++i) {
        seeds.push_back(args.train.seed + i);
    }
    const AblationResult result = ablate_fusion(collection, to_plan(args.graph, args.model),
                                                to_train_config(args.train), seeds);

    std::filesystem::create_directories(args.out);

    // Per-arm training logs and a summary table.
    std::string summary = "arm,seed,best_val_mae,test_mae\n";
    std::vector<PlotSeries> curves;
    const struct {
        const char* name;
        const char* color;
        const std::vector<AblationArm>& arms;
    } sides[] = {{"fusion_on", "#1f77b4", result.with_fusion},
                 {"fusion_off", "#d62728", result.without_fusion}};
    for (const auto& side : sides) {
        for (const AblationArm& arm : side.arms) {
            const std::string stem = std::string(side.name) + "_seed" + std::to_string(arm.seed);
            write_train_log_csv(arm.log, args.out / (stem + "_log.csv"));
            summary += side.name;
            summary += ',';
            summary += std::to_string(arm.seed);
            summary += ',';
            summary += csv::format_double(arm.log.best_val_mae);
            summary += ',';
            summary += csv::format_double(arm.test_mae);
            summary += '\n';

            PlotSeries series;
            series.label = std::string(side.name) + " seed " + std::to_string(arm.seed);
            series.color = side.color;
            for (const EpochRecord& epoch : arm.log.epochs) {
                series.values.push_back(epoch.val_mae);
            }
            curves.push_back(std::move(series));
        }
    }
    std::ofstream file(args.out / "ablation_summary.csv", std::ios::binary);
    if (!file) {
        throw InputError("cannot write '" + (args.out / "ablation_summary.csv").string() + "'");
    }
    file << summary;
    file.close();
    write_line_chart_svg(args.out / "ablation_validation.svg", "validation loss by arm", "epoch",
                         "validation MAE", curves);

    ordered_json config;
    config["manifest"] = args.manifest.string();
    graph_config(config, args.graph);
    model_config(config, args.model);
    train_config_json(config, args.train);
    config["seeds"] = args.seeds;
    config["out"] = args.out.string();
    write_run_metadata(args.out, "ablate", config, manifest_inputs(args.manifest));

    std::cout << "fusion on  median test MAE: " << result.median_with << "\n";
    std::cout << "fusion off median test MAE: " << result.median_without << "\n";
    std::cout << "summary: " << (args.out / "ablation_summary.csv").string() << "\n";
    std::cout << "chart: " << (args.out / "ablation_validation.svg").string() << "\n";
}

// ===== Error reporting =====

void print_error_json(const std::string& type, const std::string& message) {
    ordered_json error;
    error["error"] = {{"type", type}, {"message", message}};
    std::cerr << error.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap_from_env();

    CLI::App app{"context-integrated multi-graph forecasting"};
    app.set_version_flag("--version", std::string("cignn ") + kVersion);
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate a coupled synthetic dataset");
    synth->add_option("--out", synth_args.out, "output directory")->required();
    synth->add_option("--seed", synth_args.seed, "random seed")->capture_default_str();
    synth->add_option("--graphs", synth_args.graphs, "graph count (one target plus contexts)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--nodes", synth_args.nodes, "nodes per graph")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--steps", synth_args.steps, "time steps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--coupling", synth_args.coupling, "context-to-target coupling strength")
        ->capture_default_str();

    BuildGraphArgs build_args;
    CLI::App* build = app.add_subcommand("build-graph", "derive and export adjacency matrices");
    build->add_option("--manifest", build_args.manifest, "dataset manifest JSON")->required();
    build->add_option("--out", build_args.out, "output directory")->required();
    add_graph_flags(build, build_args.graph);

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a forecasting model");
    train->add_option("--manifest", train_args.manifest, "dataset manifest JSON")->required();
    train->add_option("--out", train_args.out, "output directory")->required();
    add_graph_flags(train, train_args.graph);
    add_model_flags(train, train_args.model);
    add_train_flags(train, train_args.train);

    EvaluateArgs evaluate_args;
    CLI::App* evaluate = app.add_subcommand("evaluate",
                                            "score a checkpoint against the baselines");
    evaluate->add_option("--manifest", evaluate_args.manifest, "dataset manifest JSON")
        ->required();
    evaluate->add_option("--checkpoint", evaluate_args.checkpoint, "trained checkpoint JSON")
        ->required();
    evaluate->add_option("--out", evaluate_args.out, "output directory (omit for table only)");
    add_graph_flags(evaluate, evaluate_args.graph);
    evaluate->add_option("--var-lag", evaluate_args.var_lag,
                         "autoregression lag (0 = the model window)")
        ->capture_default_str();

    AblateArgs ablate_args;
    CLI::App* ablate = app.add_subcommand("ablate", "paired fusion on/off study over seeds");
    ablate->add_option("--manifest", ablate_args.manifest, "dataset manifest JSON")->required();
    ablate->add_option("--out", ablate_args.out, "output directory")->required();
    add_graph_flags(ablate, ablate_args.graph);
    add_model_flags(ablate, ablate_args.model);
    add_train_flags(ablate, ablate_args.train);
    ablate->add_option("--seeds", ablate_args.seeds, "number of consecutive seeds, from --seed")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            return app.exit(e);  // --help / --version
        }
        print_error_json("config", e.what());
        return 2;
    }

    try {
        if (synth->parsed()) {
            cmd_synth(synth_args);
        } else if (build->parsed()) {
            cmd_build_graph(build_args);
        } else if (train->parsed()) {
            cmd_train(train_args);
        } else if (evaluate->parsed()) {
            cmd_evaluate(evaluate_args);
        } else if (ablate->parsed()) {
            cmd_ablate(ablate_args);
        }
    } catch (const ConfigError& e) {
        print_error_json("config", e.what());
        return 2;
    } catch (const ParseError& e) {
        print_error_json("parse", e.what());
        return 3;
    } catch (const DataError& e) {
        print_error_json("data", e.what());
        return 3;
    } catch (const DimensionError& e) {
        print_error_json("dimension", e.what());
        return 3;
    } catch (const InputError& e) {
        print_error_json("input", e.what());
        return 3;
    } catch (const NumericError& e) {
        print_error_json("numeric", e.what());
        return 4;
    } catch (const std::exception& e) {
        print_error_json("internal", e.what());
        return 1;
    }
    return 0;
}
