#include "cignn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "cignn/csv.hpp"
#include "cignn/errors.hpp"
#include "cignn/rng.hpp"

namespace cignn {
namespace {

constexpr double kPi = 3.14159265358979323846;

// A train-segment series whose spread is this small relative to its level is
// treated as constant and passed through normalization unchanged.
constexpr double kConstantSeriesTolerance = 1e-12;

std::string role_name(bool is_target) { return is_target ? "target" : "context"; }

const nlohmann::json& require_field(const nlohmann::json& object, const char* key,
                                    const std::string& where) {
    if (!object.is_object()) {
        throw ParseError("manifest: " + where + " must be a JSON object");
    }
    auto it = object.find(key);
    if (it == object.end()) {
        throw ParseError("manifest: " + where + " is missing required key \"" + key + "\"");
    }
    return *it;
}

std::string as_string(const nlohmann::json& value, const std::string& what) {
    if (!value.is_string()) {
        throw ParseError("manifest: " + what + " must be a string");
    }
    return value.get<std::string>();
}

// Loads one series CSV: header row "timestamp,<node>,<node>,...", one row per
// step.  Returns the timestamps and a (T, N) column-major-by-row value table.
struct SeriesFile {
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> node_ids;
    std::vector<std::vector<double>> rows;  // T rows of N values
};

SeriesFile read_series_file(const std::filesystem::path& path) {
    const csv::Table table = csv::read_table(path);
    if (table.header.size() < 2) {
        throw ParseError(path.string() +
                         ": series files need a timestamp column and at least one node column");
    }
    if (table.rows.empty()) {
        throw DataError(path.string() + ": series file has no data rows");
    }
    SeriesFile series;
    series.node_ids.assign(table.header.begin() + 1, table.header.end());
    series.timestamps.reserve(table.rows.size());
    series.rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        series.timestamps.push_back(csv::parse_timestamp(row[0], path.string(), r + 2));
        std::vector<double> values(row.size() - 1);
        for (std::size_t c = 1; c < row.size(); ++c) {
            values[c - 1] = csv::parse_double(row[c], path.string(), r + 2, c + 1);
        }
        series.rows.push_back(std::move(values));
    }
    return series;
}

GraphCollection slice_collection(const GraphCollection& collection, std::size_t begin,
                                 std::size_t end) {
    GraphCollection out;
    out.specs = collection.specs;
    out.interval_seconds = collection.interval_seconds;
    out.period_steps = collection.period_steps;
    out.timestamps.assign(collection.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          collection.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    out.signals.reserve(collection.signals.size());
    for (const GraphSignal& signal : collection.signals) {
        const std::size_t n = signal.node_count();
        const std::size_t p = signal.feature_count();
        GraphSignal sliced;
        sliced.graph_id = signal.graph_id;
        sliced.node_ids = signal.node_ids;
        sliced.feature_names = signal.feature_names;
        sliced.values = Tensor({end - begin, n, p});
        const double* src = signal.values.data() + begin * n * p;
        std::copy(src, src + (end - begin) * n * p, sliced.values.data());
        out.signals.push_back(std::move(sliced));
    }
    return out;
}

}  // namespace

// ===== GraphCollection =====

std::size_t GraphCollection::target_index() const {
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].is_target) {
            return i;
        }
    }
    throw DataError("collection has no target graph");
}

// ===== Loading =====

GraphCollection load_collection(const std::filesystem::path& manifest_path) {
    std::ifstream stream(manifest_path);
    if (!stream) {
        throw InputError("cannot open manifest " + manifest_path.string());
    }
    nlohmann::json manifest;
    try {
        stream >> manifest;
    } catch (const nlohmann::json::parse_error& err) {
        throw ParseError(manifest_path.string() + ": " + err.what());
    }
    if (!manifest.is_object()) {
        throw ParseError("manifest: top level must be a JSON object");
    }

    GraphCollection collection;
    const auto& interval = require_field(manifest, "interval-seconds", "manifest");
    if (!interval.is_number_integer() || interval.get<std::int64_t>() <= 0) {
        throw ParseError("manifest: \"interval-seconds\" must be a positive integer");
    }
    collection.interval_seconds = interval.get<std::int64_t>();
    if (manifest.contains("period-steps")) {
        const auto& period = manifest.at("period-steps");
        if (!period.is_number_integer() || period.get<std::int64_t>() <= 0) {
            throw ParseError("manifest: \"period-steps\" must be a positive integer");
        }
        collection.period_steps = period.get<std::size_t>();
    }

    const auto& graphs = require_field(manifest, "graphs", "manifest");
    if (!graphs.is_array() || graphs.empty()) {
        throw ParseError("manifest: \"graphs\" must be a non-empty array");
    }

    const std::filesystem::path base = manifest_path.parent_path();
    std::size_t target_count = 0;
    for (const auto& entry : graphs) {
        const std::string id = as_string(require_field(entry, "id", "graph entry"), "graph id");
        for (const GraphSpec& existing : collection.specs) {
            if (existing.id == id) {
                throw ParseError("manifest: duplicate graph id \"" + id + "\"");
            }
        }
        const std::string role =
            as_string(require_field(entry, "role", "graph \"" + id + "\""), "role of graph \"" + id + "\"");
        if (role != "target" && role != "context") {
            throw ParseError("manifest: graph \"" + id + "\" has unknown role \"" + role +
                             "\" (expected \"target\" or \"context\")");
        }
        const auto& files = require_field(entry, "files", "graph \"" + id + "\"");
        if (!files.is_array() || files.empty()) {
            throw ParseError("manifest: graph \"" + id + "\" needs a non-empty \"files\" array");
        }

        GraphSpec spec;
        spec.id = id;
        spec.is_target = role == "target";
        target_count += spec.is_target ? 1 : 0;

        GraphSignal signal;
        signal.graph_id = id;
        std::vector<SeriesFile> feature_files;
        for (const auto& file_entry : files) {
            const std::string feature = as_string(
                require_field(file_entry, "feature", "file entry of graph \"" + id + "\""),
                "feature name in graph \"" + id + "\"");
            const std::string rel = as_string(
                require_field(file_entry, "path", "file entry of graph \"" + id + "\""),
                "file path in graph \"" + id + "\"");
            spec.feature_names.push_back(feature);
            feature_files.push_back(read_series_file(base / rel));
        }
        if (entry.contains("coordinates-path")) {
            spec.coordinates_path =
                base / as_string(entry.at("coordinates-path"),
                                 "coordinates path of graph \"" + id + "\"");
        }

        // Every feature file of a graph must cover the same nodes and steps.
        const SeriesFile& first = feature_files.front();
        for (std::size_t f = 1; f < feature_files.size(); ++f) {
            if (feature_files[f].node_ids != first.node_ids) {
                throw DataError("graph \"" + id + "\": feature \"" + spec.feature_names[f] +
                                "\" lists different node columns than feature \"" +
                                spec.feature_names[0] + "\"");
            }
            if (feature_files[f].timestamps != first.timestamps) {
                throw DataError("graph \"" + id + "\": feature \"" + spec.feature_names[f] +
                                "\" has timestamps that diverge from feature \"" +
                                spec.feature_names[0] + "\"");
            }
        }

        signal.node_ids = first.node_ids;
        signal.feature_names = spec.feature_names;
        const std::size_t steps = first.timestamps.size();
        const std::size_t nodes = first.node_ids.size();
        const std::size_t features = feature_files.size();
        signal.values = Tensor({steps, nodes, features});
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t n = 0; n < nodes; ++n) {
                for (std::size_t p = 0; p < features; ++p) {
                    signal.values.at3(t, n, p) = feature_files[p].rows[t][n];
                }
            }
        }

        // All graphs share one time axis; report the first divergence.
        if (collection.timestamps.empty()) {
            collection.timestamps = first.timestamps;
        } else if (first.timestamps != collection.timestamps) {
            const std::size_t limit =
                std::min(first.timestamps.size(), collection.timestamps.size());
            std::size_t row = limit;
            for (std::size_t t = 0; t < limit; ++t) {
                if (first.timestamps[t] != collection.timestamps[t]) {
                    row = t;
                    break;
                }
            }
            std::ostringstream message;
            message << "alignment: graph \"" << id << "\" diverges from graph \""
                    << collection.specs.front().id << "\" at step " << row;
            if (row < limit) {
                message << " (" << csv::format_timestamp(first.timestamps[row]) << " vs "
                        << csv::format_timestamp(collection.timestamps[row]) << ")";
            } else {
                message << " (" << first.timestamps.size() << " vs "
                        << collection.timestamps.size() << " steps)";
            }
            throw DataError(message.str());
        }

        collection.specs.push_back(std::move(spec));
        collection.signals.push_back(std::move(signal));
    }

    if (target_count != 1) {
        throw ParseError("manifest: expected exactly one graph with role \"target\", found " +
                         std::to_string(target_count));
    }

    // The time axis must advance by exactly the declared interval.
    for (std::size_t t = 1; t < collection.timestamps.size(); ++t) {
        const std::int64_t delta = collection.timestamps[t] - collection.timestamps[t - 1];
        if (delta != collection.interval_seconds) {
            throw DataError("timestamps: step " + std::to_string(t) + " advances by " +
                            std::to_string(delta) + "s, expected " +
                            std::to_string(collection.interval_seconds) + "s");
        }
    }
    return collection;
}

Tensor load_coordinates(const std::filesystem::path& path,
                        const std::vector<std::string>& node_ids) {
    const csv::Table table = csv::read_table(path);
    if (table.header.size() != 3) {
        throw ParseError(path.string() + ": coordinates files need exactly three columns " +
                         "(node id, x, y), got " + std::to_string(table.header.size()));
    }
    std::map<std::string, std::pair<double, double>> points;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const double x = csv::parse_double(row[1], path.string(), r + 2, 2);
        const double y = csv::parse_double(row[2], path.string(), r + 2, 3);
        if (!points.emplace(row[0], std::make_pair(x, y)).second) {
            throw DataError(path.string() + ": duplicate coordinates for node \"" + row[0] + "\"");
        }
    }
    Tensor coords({node_ids.size(), 2});
    for (std::size_t n = 0; n < node_ids.size(); ++n) {
        auto it = points.find(node_ids[n]);
        if (it == points.end()) {
            throw DataError(path.string() + ": no coordinates for node \"" + node_ids[n] + "\"");
        }
        coords.at2(n, 0) = it->second.first;
        coords.at2(n, 1) = it->second.second;
        points.erase(it);
    }
    if (!points.empty()) {
        throw DataError(path.string() + ": coordinates for unknown node \"" +
                        points.begin()->first + "\"");
    }
    return coords;
}

// ===== Writing =====

std::filesystem::path write_collection(const GraphCollection& collection,
                                       const std::filesystem::path& directory,
                                       const std::vector<Tensor>& coordinates) {
    if (!coordinates.empty() && coordinates.size() != collection.graph_count()) {
        throw DimensionError("write_collection: got " + std::to_string(coordinates.size()) +
                             " coordinate sets for " + std::to_string(collection.graph_count()) +
                             " graphs");
    }
    std::filesystem::create_directories(directory);

    nlohmann::ordered_json manifest;
    manifest["interval-seconds"] = collection.interval_seconds;
    if (collection.period_steps > 0) {
        manifest["period-steps"] = collection.period_steps;
    }
    manifest["graphs"] = nlohmann::ordered_json::array();

    for (std::size_t g = 0; g < collection.graph_count(); ++g) {
        const GraphSpec& spec = collection.specs[g];
        const GraphSignal& signal = collection.signals[g];
        nlohmann::ordered_json entry;
        entry["id"] = spec.id;
        entry["role"] = role_name(spec.is_target);
        entry["files"] = nlohmann::ordered_json::array();
        for (std::size_t p = 0; p < signal.feature_count(); ++p) {
            const std::string filename = spec.id + "_" + signal.feature_names[p] + ".csv";
            std::ofstream out(directory / filename);
            if (!out) {
                throw InputError("cannot write " + (directory / filename).string());
            }
            out << "timestamp";
            for (const std::string& node : signal.node_ids) {
                out << "," << node;
            }
            out << "\n";
            for (std::size_t t = 0; t < signal.length(); ++t) {
                out << csv::format_timestamp(collection.timestamps[t]);
                for (std::size_t n = 0; n < signal.node_count(); ++n) {
                    out << "," << csv::format_double(signal.values.at3(t, n, p));
                }
                out << "\n";
            }
            entry["files"].push_back({{"feature", signal.feature_names[p]}, {"path", filename}});
        }
        if (!coordinates.empty()) {
            const Tensor& coords = coordinates[g];
            if (coords.rank() != 2 || coords.shape()[0] != signal.node_count() ||
                coords.shape()[1] != 2) {
                throw DimensionError("write_collection: coordinates for graph \"" + spec.id +
                                     "\" must be (" + std::to_string(signal.node_count()) +
                                     ", 2), got " + coords.shape_string());
            }
            const std::string filename = spec.id + "_coordinates.csv";
            std::ofstream out(directory / filename);
            if (!out) {
                throw InputError("cannot write " + (directory / filename).string());
            }
            out << "node-id,x,y\n";
            for (std::size_t n = 0; n < signal.node_count(); ++n) {
                out << signal.node_ids[n] << "," << csv::format_double(coords.at2(n, 0)) << ","
                    << csv::format_double(coords.at2(n, 1)) << "\n";
            }
            entry["coordinates-path"] = filename;
        }
        manifest["graphs"].push_back(std::move(entry));
    }

    const std::filesystem::path manifest_path = directory / "manifest.json";
    std::ofstream out(manifest_path);
    if (!out) {
        throw InputError("cannot write " + manifest_path.string());
    }
    out << manifest.dump(2) << "\n";
    return manifest_path;
}

// ===== Chronological split =====

SplitCollections chronological_split(const GraphCollection& collection, std::size_t window,
                                     std::size_t horizon, const SplitRatios& ratios) {
    if (window == 0 || horizon == 0) {
        throw ConfigError("split: window and horizon must be at least 1");
    }
    if (ratios.train <= 0.0 || ratios.validation <= 0.0 || ratios.test <= 0.0) {
        throw ConfigError("split: all three ratios must be positive");
    }
    if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
        throw ConfigError("split: ratios must sum to 1");
    }
    const std::size_t steps = collection.length();
    const auto boundary = [steps](double cumulative) {
        return static_cast<std::size_t>(std::floor(cumulative * static_cast<double>(steps)));
    };
    const std::size_t train_end = boundary(ratios.train);
    const std::size_t validation_end = boundary(ratios.train + ratios.validation);

    const std::size_t needed = window + horizon;
    const auto check = [needed](const char* name, std::size_t length) {
        if (length < needed) {
            throw DataError("insufficient data: " + std::string(name) + " segment has " +
                            std::to_string(length) + " steps but one sample needs " +
                            std::to_string(needed));
        }
    };
    check("train", train_end);
    check("validation", validation_end - train_end);
    check("test", steps - validation_end);

    SplitCollections split;
    split.train = slice_collection(collection, 0, train_end);
    split.validation = slice_collection(collection, train_end, validation_end);
    split.test = slice_collection(collection, validation_end, steps);
    return split;
}

// ===== Windowing =====

std::vector<WindowedSample> make_windows(const GraphCollection& segment, std::size_t window,
                                         std::size_t horizon) {
    if (window == 0 || horizon == 0) {
        throw ConfigError("windows: window and horizon must be at least 1");
    }
    const std::size_t steps = segment.length();
    if (steps < window + horizon) {
        throw DataError("insufficient data: segment has " + std::to_string(steps) +
                        " steps but one sample needs " + std::to_string(window + horizon));
    }
    const std::size_t count = steps - window - horizon + 1;
    std::vector<WindowedSample> samples(count);
    for (std::size_t k = 0; k < count; ++k) {
        WindowedSample& sample = samples[k];
        sample.origin_index = k + window - 1;
        sample.origin_timestamp = segment.timestamps[sample.origin_index];
        sample.inputs.reserve(segment.graph_count());
        sample.targets.reserve(segment.graph_count());
        for (const GraphSignal& signal : segment.signals) {
            const std::size_t n = signal.node_count();
            const std::size_t p = signal.feature_count();
            Tensor input({window, n, p});
            Tensor target({horizon, n, p});
            const double* base = signal.values.data() + k * n * p;
            std::copy(base, base + window * n * p, input.data());
            std::copy(base + window * n * p, base + (window + horizon) * n * p, target.data());
            sample.inputs.push_back(std::move(input));
            sample.targets.push_back(std::move(target));
        }
    }
    return samples;
}

// ===== Normalization =====

NormStats NormStats::from_split(const SplitCollections& split) {
    const GraphCollection& train = split.train;
    NormStats stats;
    stats.mean_.reserve(train.graph_count());
    stats.scale_.reserve(train.graph_count());
    for (std::size_t g = 0; g < train.graph_count(); ++g) {
        const GraphSignal& signal = train.signals[g];
        const std::size_t steps = signal.length();
        const std::size_t nodes = signal.node_count();
        const std::size_t features = signal.feature_count();
        if (steps == 0) {
            throw DataError("normalization: train segment of graph \"" + signal.graph_id +
                            "\" is empty");
        }
        Tensor mean({nodes, features});
        Tensor scale({nodes, features});
        for (std::size_t n = 0; n < nodes; ++n) {
            for (std::size_t p = 0; p < features; ++p) {
                double sum = 0.0;
                for (std::size_t t = 0; t < steps; ++t) {
                    sum += signal.values.at3(t, n, p);
                }
                const double mu = sum / static_cast<double>(steps);
                double squared = 0.0;
                for (std::size_t t = 0; t < steps; ++t) {
                    const double d = signal.values.at3(t, n, p) - mu;
                    squared += d * d;
                }
                const double sigma = std::sqrt(squared / static_cast<double>(steps));
                if (sigma <= kConstantSeriesTolerance * (std::abs(mu) + 1.0)) {
                    std::cerr << "warning: normalization: graph \"" << signal.graph_id
                              << "\" node \"" << signal.node_ids[n] << "\" feature \""
                              << signal.feature_names[p]
                              << "\" is constant in the train segment; passing it through"
                              << " unchanged\n";
                    mean.at2(n, p) = 0.0;
                    scale.at2(n, p) = 1.0;
                } else {
                    mean.at2(n, p) = mu;
                    scale.at2(n, p) = sigma;
                }
            }
        }
        stats.mean_.push_back(std::move(mean));
        stats.scale_.push_back(std::move(scale));
    }
    return stats;
}

Tensor NormStats::normalize_values(std::size_t graph, const Tensor& values) const {
    if (graph >= mean_.size()) {
        throw DimensionError("normalization: graph index " + std::to_string(graph) +
                             " out of range for " + std::to_string(mean_.size()) + " graphs");
    }
    const Tensor& mu = mean_[graph];
    const Tensor& sigma = scale_[graph];
    if (values.rank() != 3 || values.shape()[1] != mu.shape()[0] ||
        values.shape()[2] != mu.shape()[1]) {
        throw DimensionError("normalization: expected (steps, " +
                             std::to_string(mu.shape()[0]) + ", " +
                             std::to_string(mu.shape()[1]) + "), got " + values.shape_string());
    }
    Tensor out(values.shape());
    const std::size_t steps = values.shape()[0];
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t n = 0; n < mu.shape()[0]; ++n) {
            for (std::size_t p = 0; p < mu.shape()[1]; ++p) {
                out.at3(t, n, p) = (values.at3(t, n, p) - mu.at2(n, p)) / sigma.at2(n, p);
            }
        }
    }
    return out;
}

Tensor NormStats::denormalize_values(std::size_t graph, const Tensor& values) const {
    if (graph >= mean_.size()) {
        throw DimensionError("normalization: graph index " + std::to_string(graph) +
                             " out of range for " + std::to_string(mean_.size()) + " graphs");
    }
    const Tensor& mu = mean_[graph];
    const Tensor& sigma = scale_[graph];
    if (values.rank() != 3 || values.shape()[1] != mu.shape()[0] ||
        values.shape()[2] != mu.shape()[1]) {
        throw DimensionError("normalization: expected (steps, " +
                             std::to_string(mu.shape()[0]) + ", " +
                             std::to_string(mu.shape()[1]) + "), got " + values.shape_string());
    }
    Tensor out(values.shape());
    const std::size_t steps = values.shape()[0];
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t n = 0; n < mu.shape()[0]; ++n) {
            for (std::size_t p = 0; p < mu.shape()[1]; ++p) {
                out.at3(t, n, p) = values.at3(t, n, p) * sigma.at2(n, p) + mu.at2(n, p);
            }
        }
    }
    return out;
}

GraphCollection NormStats::normalize(const GraphCollection& collection) const {
    if (collection.graph_count() != mean_.size()) {
        throw DimensionError("normalization: statistics cover " + std::to_string(mean_.size()) +
                             " graphs, collection has " +
                             std::to_string(collection.graph_count()));
    }
    GraphCollection out = collection;
    for (std::size_t g = 0; g < out.graph_count(); ++g) {
        out.signals[g].values = normalize_values(g, collection.signals[g].values);
    }
    return out;
}

// ===== Synthetic data =====

namespace {

// Epoch seconds for 2024-01-01T00:00:00 (UTC).
constexpr std::int64_t kSynthStart = 1704067200;
constexpr std::int64_t kSynthInterval = 3600;
constexpr std::size_t kSynthPeriod = 24;
// Context sinusoids run on a period incommensurate with the daily one so the
// coupling term is not explainable by the target's own seasonal profile.
constexpr double kContextPeriod = 37.0;
constexpr double kCouplingScale = 3.0;

}  // namespace

GraphCollection synthesize_coupled(std::uint64_t seed, std::size_t graph_count,
                                   std::size_t nodes, std::size_t length, double coupling) {
    if (graph_count == 0 || nodes == 0) {
        throw ConfigError("synthesis: need at least one graph and one node");
    }
    if (length < 2) {
        throw ConfigError("synthesis: need at least two steps");
    }
    if (coupling < 0.0 || coupling > 1.0) {
        throw ConfigError("synthesis: coupling must lie in [0, 1], got " +
                          std::to_string(coupling));
    }

    Rng master(seed);
    // Fork order is fixed and coupling-independent: the same seed yields the
    // same context series and the same target base regardless of coupling, so
    // changing the coupling changes the target graph's values and nothing else.
    Rng context_rng = master.fork();
    Rng projection_rng = master.fork();
    Rng target_rng = master.fork();

    const std::size_t context_graphs = graph_count - 1;
    const std::size_t context_nodes = context_graphs * nodes;

    // Context series: per-node level + slow sinusoid + AR(1) noise.
    std::vector<Tensor> context_values(context_graphs);
    // Deviations from the per-node level drive the coupling term.  Pearson
    // correlation is shift-invariant, so measuring against the raw context
    // series sees the same coupling strength.
    std::vector<std::vector<double>> context_deviation(context_nodes,
                                                       std::vector<double>(length));
    for (std::size_t g = 0; g < context_graphs; ++g) {
        context_values[g] = Tensor({length, nodes, 1});
        for (std::size_t n = 0; n < nodes; ++n) {
            const double level = context_rng.uniform(-0.5, 0.5);
            const double amplitude = context_rng.uniform(0.6, 1.4);
            const double phase = context_rng.uniform(0.0, 1.0);
            double state = 0.0;
            for (std::size_t t = 0; t < length; ++t) {
                state = 0.9 * state + 0.3 * context_rng.normal();
                const double wave =
                    amplitude *
                    std::sin(2.0 * kPi * (static_cast<double>(t) / kContextPeriod + phase));
                context_deviation[g * nodes + n][t] = wave + state;
                context_values[g].at3(t, n, 0) = level + wave + state;
            }
        }
    }

    // Positive projection weights pooling all context nodes into one bounded
    // driver per target node.
    std::vector<std::vector<double>> projection(nodes);
    std::vector<double> gain(nodes, 0.0);
    for (std::size_t n = 0; n < nodes; ++n) {
        projection[n].resize(context_nodes);
        for (std::size_t c = 0; c < context_nodes; ++c) {
            projection[n][c] =
                projection_rng.uniform(0.5, 1.5) / static_cast<double>(std::max<std::size_t>(
                                                       context_nodes, 1));
        }
        gain[n] = projection_rng.uniform(0.7, 1.3);
    }

    // Target series: daily profile + spatially smoothed AR(1) noise +
    // coupling * bounded transform of the previous step's context state.
    std::vector<double> profile_amplitude(nodes), profile_phase(nodes), profile_level(nodes);
    for (std::size_t n = 0; n < nodes; ++n) {
        profile_amplitude[n] = target_rng.uniform(1.5, 2.5);
        profile_phase[n] = target_rng.uniform(0.0, 1.0);
        profile_level[n] = target_rng.uniform(4.0, 6.0);
    }
    std::vector<std::vector<double>> raw_noise(nodes, std::vector<double>(length));
    for (std::size_t n = 0; n < nodes; ++n) {
        double state = 0.0;
        for (std::size_t t = 0; t < length; ++t) {
            state = 0.7 * state + 0.35 * target_rng.normal();
            raw_noise[n][t] = state;
        }
    }

    Tensor target_values({length, nodes, 1});
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t n = 0; n < nodes; ++n) {
            const double wave =
                profile_amplitude[n] *
                std::sin(2.0 * kPi *
                         (static_cast<double>(t % kSynthPeriod) / kSynthPeriod +
                          profile_phase[n]));
            const double smoothed =
                nodes == 1 ? raw_noise[0][t]
                           : 0.75 * raw_noise[n][t] + 0.25 * raw_noise[(n + 1) % nodes][t];
            double driver = 0.0;
            if (t > 0 && context_nodes > 0) {
                double pooled = 0.0;
                for (std::size_t c = 0; c < context_nodes; ++c) {
                    pooled += projection[n][c] * context_deviation[c][t - 1];
                }
                driver = gain[n] * std::tanh(pooled);
            }
            target_values.at3(t, n, 0) = profile_level[n] + wave + smoothed +
                                         coupling * kCouplingScale * driver;
        }
    }

    GraphCollection collection;
    collection.interval_seconds = kSynthInterval;
    collection.period_steps = kSynthPeriod;
    collection.timestamps.resize(length);
    for (std::size_t t = 0; t < length; ++t) {
        collection.timestamps[t] =
            kSynthStart + static_cast<std::int64_t>(t) * kSynthInterval;
    }

    const auto node_ids = [nodes]() {
        std::vector<std::string> ids(nodes);
        for (std::size_t n = 0; n < nodes; ++n) {
            ids[n] = "n" + std::to_string(n);
        }
        return ids;
    }();

    GraphSpec target_spec;
    target_spec.id = "demand";
    target_spec.is_target = true;
    target_spec.feature_names = {"value"};
    GraphSignal target_signal;
    target_signal.graph_id = "demand";
    target_signal.values = std::move(target_values);
    target_signal.node_ids = node_ids;
    target_signal.feature_names = {"value"};
    collection.specs.push_back(std::move(target_spec));
    collection.signals.push_back(std::move(target_signal));

    for (std::size_t g = 0; g < context_graphs; ++g) {
        GraphSpec spec;
        spec.id = "ctx" + std::to_string(g + 1);
        spec.is_target = false;
        spec.feature_names = {"value"};
        GraphSignal signal;
        signal.graph_id = spec.id;
        signal.values = std::move(context_values[g]);
        signal.node_ids = node_ids;
        signal.feature_names = {"value"};
        collection.specs.push_back(std::move(spec));
        collection.signals.push_back(std::move(signal));
    }
    return collection;
}

std::vector<Tensor> synthetic_coordinates(std::size_t graph_count, std::size_t nodes) {
    std::vector<Tensor> coordinates(graph_count);
    for (std::size_t g = 0; g < graph_count; ++g) {
        Tensor coords({nodes, 2});
        for (std::size_t n = 0; n < nodes; ++n) {
            coords.at2(n, 0) = static_cast<double>(n);
            coords.at2(n, 1) = 0.0;
        }
        coordinates[g] = std::move(coords);
    }
    return coordinates;
}

}  // namespace cignn
