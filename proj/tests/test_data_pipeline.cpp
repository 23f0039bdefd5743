#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cignn/csv.hpp"
#include "cignn/data.hpp"
#include "cignn/errors.hpp"
#include "cignn/rng.hpp"
#include "cignn/tensor.hpp"

namespace {

using namespace cignn;

// Scratch directory that cleans up after each test case.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("cignn_test_" + tag + "_" + std::to_string(++counter));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
}

// Two-graph fixture: target "demand" with features load+price on nodes a,b;
// context "weather" with one feature on nodes w1,w2,w3.  Hourly, 8 steps.
std::filesystem::path write_fixture(const TempDir& dir) {
    std::ostringstream load, price, temperature;
    load << "timestamp,a,b\n";
    price << "timestamp,a,b\n";
    temperature << "timestamp,w1,w2,w3\n";
    for (int t = 0; t < 8; ++t) {
        std::ostringstream stamp;
        stamp << "2024-03-01T0" << t << ":00:00";
        load << stamp.str() << "," << 10 + t << "," << 20 + 2 * t << "\n";
        price << stamp.str() << "," << 0.5 * t << "," << 1.0 + 0.25 * t << "\n";
        temperature << stamp.str() << "," << -t << "," << t * t << "," << 3 << "\n";
    }
    write_file(dir.path / "demand_load.csv", load.str());
    write_file(dir.path / "demand_price.csv", price.str());
    write_file(dir.path / "weather_temperature.csv", temperature.str());
    write_file(dir.path / "demand_coords.csv", "node-id,x,y\na,0,0\nb,3,4\n");
    write_file(dir.path / "manifest.json", R"({
        "interval-seconds": 3600,
        "period-steps": 24,
        "graphs": [
            {"id": "demand", "role": "target",
             "files": [{"feature": "load", "path": "demand_load.csv"},
                        {"feature": "price", "path": "demand_price.csv"}],
             "coordinates-path": "demand_coords.csv"},
            {"id": "weather", "role": "context",
             "files": [{"feature": "temperature", "path": "weather_temperature.csv"}]}
        ]
    })");
    return dir.path / "manifest.json";
}

// Single-graph collection over a ramp signal: values[t, n, 0] = t + 100 n.
GraphCollection ramp_collection(std::size_t steps, std::size_t nodes) {
    GraphCollection collection;
    collection.interval_seconds = 60;
    collection.timestamps.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        collection.timestamps[t] = 1000 + 60 * static_cast<std::int64_t>(t);
    }
    GraphSpec spec;
    spec.id = "ramp";
    spec.is_target = true;
    spec.feature_names = {"value"};
    GraphSignal signal;
    signal.graph_id = "ramp";
    signal.feature_names = {"value"};
    signal.values = Tensor({steps, nodes, 1});
    for (std::size_t n = 0; n < nodes; ++n) {
        signal.node_ids.push_back("n" + std::to_string(n));
        for (std::size_t t = 0; t < steps; ++t) {
            signal.values.at3(t, n, 0) =
                static_cast<double>(t) + 100.0 * static_cast<double>(n);
        }
    }
    collection.specs.push_back(spec);
    collection.signals.push_back(std::move(signal));
    return collection;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    REQUIRE(x.size() == y.size());
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// Node-averaged series of one graph, optionally with the per-phase (seasonal)
// mean profile removed.
std::vector<double> node_mean_series(const GraphSignal& signal, std::size_t deseason_period) {
    const std::size_t steps = signal.length();
    std::vector<double> series(steps, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        double sum = 0.0;
        for (std::size_t n = 0; n < signal.node_count(); ++n) {
            sum += signal.values.at3(t, n, 0);
        }
        series[t] = sum / static_cast<double>(signal.node_count());
    }
    if (deseason_period > 0) {
        std::vector<double> phase_sum(deseason_period, 0.0);
        std::vector<std::size_t> phase_count(deseason_period, 0);
        for (std::size_t t = 0; t < steps; ++t) {
            phase_sum[t % deseason_period] += series[t];
            phase_count[t % deseason_period] += 1;
        }
        for (std::size_t t = 0; t < steps; ++t) {
            series[t] -= phase_sum[t % deseason_period] /
                         static_cast<double>(phase_count[t % deseason_period]);
        }
    }
    return series;
}

}  // namespace

TEST_SUITE("data_pipeline") {

// ===== CSV helpers =====

TEST_CASE("csv: timestamps parse in all three accepted layouts") {
    const std::int64_t day = csv::parse_timestamp("2024-03-01", "f", 2);
    CHECK(csv::parse_timestamp("2024-03-01 00:00:00", "f", 2) == day);
    CHECK(csv::parse_timestamp("2024-03-01T00:00:00", "f", 2) == day);
    CHECK(csv::parse_timestamp("2024-03-01T01:00:00", "f", 2) == day + 3600);
    CHECK(csv::parse_timestamp("2024-03-02", "f", 2) == day + 86400);
    // 2024 is a leap year.
    CHECK(csv::parse_timestamp("2024-03-01", "f", 2) -
              csv::parse_timestamp("2024-02-28", "f", 2) ==
          2 * 86400);
}

TEST_CASE("csv: timestamp formatting round-trips") {
    for (const std::int64_t stamp : {0L, 1704067200L, 951782400L, 4102444799L}) {
        const std::string text = csv::format_timestamp(stamp);
        CHECK(csv::parse_timestamp(text, "f", 2) == stamp);
    }
    CHECK(csv::format_timestamp(1704067200) == "2024-01-01T00:00:00");
}

TEST_CASE("csv: malformed timestamps point at their cell") {
    CHECK_THROWS_WITH_AS(csv::parse_timestamp("2024-13-01", "series.csv", 7),
                         doctest::Contains("series.csv"), ParseError);
    CHECK_THROWS_WITH_AS(csv::parse_timestamp("yesterday", "series.csv", 7),
                         doctest::Contains("row 7"), ParseError);
    CHECK_THROWS_AS(csv::parse_timestamp("2024-02-30", "f", 2), ParseError);
    CHECK_THROWS_AS(csv::parse_timestamp("2024-03-01T25:00:00", "f", 2), ParseError);
}

TEST_CASE("csv: doubles format-parse round-trip exactly") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        const double value = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-8.0, 8.0));
        const std::string text = csv::format_double(value);
        CHECK(csv::parse_double(text, "f", 2, 1) == value);
    }
}

// ===== Manifest loading =====

TEST_CASE("load_collection: reads graphs, features, and the shared time axis") {
    TempDir dir("load");
    const GraphCollection collection = load_collection(write_fixture(dir));

    REQUIRE(collection.graph_count() == 2);
    CHECK(collection.interval_seconds == 3600);
    CHECK(collection.period_steps == 24);
    CHECK(collection.length() == 8);
    CHECK(collection.target_index() == 0);
    CHECK(collection.specs[0].id == "demand");
    CHECK(collection.specs[0].is_target);
    CHECK_FALSE(collection.specs[1].is_target);
    CHECK(collection.specs[0].coordinates_path.filename() == "demand_coords.csv");
    CHECK(collection.specs[1].coordinates_path.empty());

    const GraphSignal& demand = collection.signals[0];
    REQUIRE(demand.values.shape() == std::vector<std::size_t>{8, 2, 2});
    CHECK(demand.node_ids == std::vector<std::string>{"a", "b"});
    CHECK(demand.feature_names == std::vector<std::string>{"load", "price"});
    CHECK(demand.values.at3(3, 0, 0) == 13.0);       // load of node a at t=3
    CHECK(demand.values.at3(3, 1, 0) == 26.0);       // load of node b
    CHECK(demand.values.at3(4, 0, 1) == 2.0);        // price of node a at t=4
    CHECK(demand.values.at3(4, 1, 1) == 2.0);        // price of node b

    const GraphSignal& weather = collection.signals[1];
    REQUIRE(weather.values.shape() == std::vector<std::size_t>{8, 3, 1});
    CHECK(weather.values.at3(5, 0, 0) == -5.0);
    CHECK(weather.values.at3(5, 1, 0) == 25.0);

    CHECK(collection.timestamps.front() == csv::parse_timestamp("2024-03-01T00:00:00", "f", 2));
    CHECK(collection.timestamps[1] - collection.timestamps[0] == 3600);
}

TEST_CASE("load_collection: structural manifest problems are parse errors") {
    TempDir dir("manifest");
    const auto manifest = dir.path / "manifest.json";
    write_file(dir.path / "a.csv", "timestamp,x\n2024-01-01,1\n2024-01-01T01:00:00,2\n");

    SUBCASE("invalid JSON") {
        write_file(manifest, "{not json");
        CHECK_THROWS_AS(load_collection(manifest), ParseError);
    }
    SUBCASE("no target graph") {
        write_file(manifest, R"({"interval-seconds": 3600, "graphs": [
            {"id": "a", "role": "context", "files": [{"feature": "v", "path": "a.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(manifest),
                             doctest::Contains("exactly one graph"), ParseError);
    }
    SUBCASE("two target graphs") {
        write_file(dir.path / "b.csv", "timestamp,x\n2024-01-01,1\n2024-01-01T01:00:00,2\n");
        write_file(manifest, R"({"interval-seconds": 3600, "graphs": [
            {"id": "a", "role": "target", "files": [{"feature": "v", "path": "a.csv"}]},
            {"id": "b", "role": "target", "files": [{"feature": "v", "path": "b.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(manifest), doctest::Contains("found 2"), ParseError);
    }
    SUBCASE("unknown role") {
        write_file(manifest, R"({"interval-seconds": 3600, "graphs": [
            {"id": "a", "role": "driver", "files": [{"feature": "v", "path": "a.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(manifest), doctest::Contains("driver"), ParseError);
    }
    SUBCASE("duplicate graph id") {
        write_file(manifest, R"({"interval-seconds": 3600, "graphs": [
            {"id": "a", "role": "target", "files": [{"feature": "v", "path": "a.csv"}]},
            {"id": "a", "role": "context", "files": [{"feature": "v", "path": "a.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(manifest), doctest::Contains("duplicate"),
                             ParseError);
    }
    SUBCASE("missing interval") {
        write_file(manifest, R"({"graphs": [
            {"id": "a", "role": "target", "files": [{"feature": "v", "path": "a.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(manifest),
                             doctest::Contains("interval-seconds"), ParseError);
    }
    SUBCASE("non-integer interval") {
        write_file(manifest, R"({"interval-seconds": "hourly", "graphs": [
            {"id": "a", "role": "target", "files": [{"feature": "v", "path": "a.csv"}]}]})");
        CHECK_THROWS_AS(load_collection(manifest), ParseError);
    }
    SUBCASE("missing manifest file") {
        CHECK_THROWS_AS(load_collection(dir.path / "absent.json"), InputError);
    }
}

TEST_CASE("load_collection: misaligned series name the first divergence") {
    TempDir dir("align");
    write_file(dir.path / "a.csv",
               "timestamp,x\n2024-01-01T00:00:00,1\n2024-01-01T01:00:00,2\n"
               "2024-01-01T02:00:00,3\n");

    SUBCASE("timestamp mismatch across graphs") {
        write_file(dir.path / "b.csv",
                   "timestamp,y\n2024-01-01T00:00:00,1\n2024-01-01T01:30:00,2\n"
                   "2024-01-01T02:00:00,3\n");
        write_file(dir.path / "manifest.json", R"({"interval-seconds": 3600, "graphs": [
            {"id": "a", "role": "target", "files": [{"feature": "v", "path": "a.csv"}]},
            {"id": "b", "role": "context", "files": [{"feature": "v", "path": "b.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(dir.path / "manifest.json"),
                             doctest::Contains("at step 1"), DataError);
    }
    SUBCASE("length mismatch across graphs") {
        write_file(dir.path / "b.csv",
                   "timestamp,y\n2024-01-01T00:00:00,1\n2024-01-01T01:00:00,2\n");
        write_file(dir.path / "manifest.json", R"({"interval-seconds": 3600, "graphs": [
            {"id": "a", "role": "target", "files": [{"feature": "v", "path": "a.csv"}]},
            {"id": "b", "role": "context", "files": [{"feature": "v", "path": "b.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(dir.path / "manifest.json"),
                             doctest::Contains("alignment"), DataError);
    }
    SUBCASE("feature files of one graph disagree on nodes") {
        write_file(dir.path / "a2.csv",
                   "timestamp,z\n2024-01-01T00:00:00,1\n2024-01-01T01:00:00,2\n"
                   "2024-01-01T02:00:00,3\n");
        write_file(dir.path / "manifest.json", R"({"interval-seconds": 3600, "graphs": [
            {"id": "a", "role": "target", "files": [{"feature": "v", "path": "a.csv"},
                                                      {"feature": "w", "path": "a2.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(dir.path / "manifest.json"),
                             doctest::Contains("node columns"), DataError);
    }
    SUBCASE("interval violation names the step") {
        write_file(dir.path / "manifest.json", R"({"interval-seconds": 1800, "graphs": [
            {"id": "a", "role": "target", "files": [{"feature": "v", "path": "a.csv"}]}]})");
        CHECK_THROWS_WITH_AS(load_collection(dir.path / "manifest.json"),
                             doctest::Contains("expected 1800s"), DataError);
    }
}

TEST_CASE("load_coordinates: matches rows to node ids in signal order") {
    TempDir dir("coords");
    write_file(dir.path / "c.csv", "node-id,x,y\nb,3,4\na,0,0\n");
    const Tensor coords = load_coordinates(dir.path / "c.csv", {"a", "b"});
    CHECK(coords.at2(0, 0) == 0.0);
    CHECK(coords.at2(1, 0) == 3.0);
    CHECK(coords.at2(1, 1) == 4.0);

    write_file(dir.path / "missing.csv", "node-id,x,y\na,0,0\n");
    CHECK_THROWS_WITH_AS(load_coordinates(dir.path / "missing.csv", {"a", "b"}),
                         doctest::Contains("\"b\""), DataError);
    write_file(dir.path / "extra.csv", "node-id,x,y\na,0,0\nb,1,1\nq,9,9\n");
    CHECK_THROWS_WITH_AS(load_coordinates(dir.path / "extra.csv", {"a", "b"}),
                         doctest::Contains("unknown node"), DataError);
    write_file(dir.path / "dup.csv", "node-id,x,y\na,0,0\na,1,1\nb,1,1\n");
    CHECK_THROWS_WITH_AS(load_coordinates(dir.path / "dup.csv", {"a", "b"}),
                         doctest::Contains("duplicate"), DataError);
}

TEST_CASE("write_collection: output round-trips through load_collection exactly") {
    TempDir dir("roundtrip");
    const GraphCollection original = synthesize_coupled(7, 2, 3, 30, 0.5);
    const auto manifest =
        write_collection(original, dir.path / "out", synthetic_coordinates(2, 3));
    const GraphCollection loaded = load_collection(manifest);

    REQUIRE(loaded.graph_count() == original.graph_count());
    CHECK(loaded.timestamps == original.timestamps);
    CHECK(loaded.interval_seconds == original.interval_seconds);
    CHECK(loaded.period_steps == original.period_steps);
    for (std::size_t g = 0; g < loaded.graph_count(); ++g) {
        CHECK(loaded.specs[g].id == original.specs[g].id);
        CHECK(loaded.specs[g].is_target == original.specs[g].is_target);
        CHECK(loaded.signals[g].node_ids == original.signals[g].node_ids);
        REQUIRE(loaded.signals[g].values.shape() == original.signals[g].values.shape());
        for (std::size_t i = 0; i < loaded.signals[g].values.size(); ++i) {
            CHECK(loaded.signals[g].values.data()[i] == original.signals[g].values.data()[i]);
        }
        const Tensor coords =
            load_coordinates(loaded.specs[g].coordinates_path, loaded.signals[g].node_ids);
        CHECK(coords.at2(2, 0) == 2.0);
    }
}

// ===== Chronological split =====

TEST_CASE("chronological_split: boundaries fall at floors of cumulative ratios") {
    const GraphCollection collection = ramp_collection(100, 2);
    const SplitCollections split = chronological_split(collection, 6, 3);
    CHECK(split.train.length() == 70);
    CHECK(split.validation.length() == 10);
    CHECK(split.test.length() == 20);
    // Segments are consecutive: values and timestamps continue seamlessly.
    CHECK(split.train.signals[0].values.at3(69, 0, 0) == 69.0);
    CHECK(split.validation.signals[0].values.at3(0, 0, 0) == 70.0);
    CHECK(split.test.signals[0].values.at3(0, 0, 0) == 80.0);
    CHECK(split.test.timestamps.front() == collection.timestamps[80]);
    CHECK(split.validation.graph_count() == 1);
    CHECK(split.test.period_steps == collection.period_steps);

    // 101 steps: boundaries at floor(70.7) = 70 and floor(80.8) = 80.
    const SplitCollections odd = chronological_split(ramp_collection(101, 1), 6, 3);
    CHECK(odd.train.length() == 70);
    CHECK(odd.validation.length() == 10);
    CHECK(odd.test.length() == 21);
}

TEST_CASE("chronological_split: short segments raise insufficient-data errors") {
    // 40 steps => validation segment has 4 steps, needing 6 + 3 = 9.
    CHECK_THROWS_WITH_AS(chronological_split(ramp_collection(40, 1), 6, 3),
                         doctest::Contains("validation"), DataError);
    CHECK_THROWS_WITH_AS(chronological_split(ramp_collection(40, 1), 6, 3),
                         doctest::Contains("insufficient data"), DataError);
    // Generous window: even the train segment is too short.
    CHECK_THROWS_WITH_AS(chronological_split(ramp_collection(40, 1), 30, 3),
                         doctest::Contains("train"), DataError);
    CHECK_NOTHROW(chronological_split(ramp_collection(90, 1), 6, 3));
}

TEST_CASE("chronological_split: ratio validation") {
    const GraphCollection collection = ramp_collection(100, 1);
    CHECK_THROWS_AS(chronological_split(collection, 6, 3, {0.5, 0.2, 0.2}), ConfigError);
    CHECK_THROWS_AS(chronological_split(collection, 6, 3, {0.8, 0.0, 0.2}), ConfigError);
    CHECK_THROWS_AS(chronological_split(collection, 0, 3), ConfigError);
    CHECK_NOTHROW(chronological_split(collection, 6, 3, {0.6, 0.2, 0.2}));
}

// ===== Windowing =====

TEST_CASE("make_windows: stride-one samples with exact contents") {
    const GraphCollection collection = ramp_collection(10, 2);
    const auto samples = make_windows(collection, 3, 2);
    REQUIRE(samples.size() == 6);  // 10 - 3 - 2 + 1
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const WindowedSample& sample = samples[k];
        REQUIRE(sample.inputs.size() == 1);
        REQUIRE(sample.inputs[0].shape() == std::vector<std::size_t>{3, 2, 1});
        REQUIRE(sample.targets[0].shape() == std::vector<std::size_t>{2, 2, 1});
        for (std::size_t t = 0; t < 3; ++t) {
            CHECK(sample.inputs[0].at3(t, 0, 0) == static_cast<double>(k + t));
            CHECK(sample.inputs[0].at3(t, 1, 0) == static_cast<double>(k + t) + 100.0);
        }
        for (std::size_t h = 0; h < 2; ++h) {
            CHECK(sample.targets[0].at3(h, 0, 0) == static_cast<double>(k + 3 + h));
        }
        CHECK(sample.origin_index == k + 2);
        CHECK(sample.origin_timestamp == 1000 + 60 * static_cast<std::int64_t>(k + 2));
    }
}

TEST_CASE("make_windows: exact-fit segment yields one sample, shorter fails") {
    const auto samples = make_windows(ramp_collection(5, 1), 3, 2);
    CHECK(samples.size() == 1);
    CHECK_THROWS_WITH_AS(make_windows(ramp_collection(4, 1), 3, 2),
                         doctest::Contains("insufficient data"), DataError);
}

// ===== Normalization =====

TEST_CASE("normalization: train statistics become zero mean and unit spread") {
    const GraphCollection collection = synthesize_coupled(11, 2, 4, 120, 0.6);
    const SplitCollections split = chronological_split(collection, 6, 3);
    const NormStats stats = NormStats::from_split(split);
    const GraphCollection normalized = stats.normalize(split.train);

    for (std::size_t g = 0; g < normalized.graph_count(); ++g) {
        const GraphSignal& signal = normalized.signals[g];
        const std::size_t steps = signal.length();
        for (std::size_t n = 0; n < signal.node_count(); ++n) {
            double sum = 0.0, squared = 0.0;
            for (std::size_t t = 0; t < steps; ++t) {
                sum += signal.values.at3(t, n, 0);
            }
            const double mean = sum / static_cast<double>(steps);
            for (std::size_t t = 0; t < steps; ++t) {
                const double d = signal.values.at3(t, n, 0) - mean;
                squared += d * d;
            }
            const double stddev = std::sqrt(squared / static_cast<double>(steps));
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(stddev - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("normalization: round-trip restores originals to 1e-12") {
    const GraphCollection collection = synthesize_coupled(12, 3, 3, 100, 0.4);
    const SplitCollections split = chronological_split(collection, 6, 3);
    const NormStats stats = NormStats::from_split(split);
    for (const GraphCollection* segment : {&split.train, &split.validation, &split.test}) {
        for (std::size_t g = 0; g < segment->graph_count(); ++g) {
            const Tensor normalized = stats.normalize_values(g, segment->signals[g].values);
            const Tensor restored = stats.denormalize_values(g, normalized);
            for (std::size_t i = 0; i < restored.size(); ++i) {
                CHECK(restored.data()[i] ==
                      doctest::Approx(segment->signals[g].values.data()[i]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("normalization: constant training nodes pass through unchanged") {
    GraphCollection collection = ramp_collection(50, 2);
    // Freeze node 1 at a constant.
    for (std::size_t t = 0; t < 50; ++t) {
        collection.signals[0].values.at3(t, 1, 0) = 42.0;
    }
    const SplitCollections split = chronological_split(collection, 3, 2);
    const NormStats stats = NormStats::from_split(split);
    CHECK(stats.mean(0).at2(1, 0) == 0.0);
    CHECK(stats.scale(0).at2(1, 0) == 1.0);
    const Tensor normalized = stats.normalize_values(0, split.test.signals[0].values);
    for (std::size_t t = 0; t < split.test.length(); ++t) {
        CHECK(normalized.at3(t, 1, 0) == 42.0);  // untouched
    }
    CHECK(std::abs(normalized.at3(0, 0, 0)) < 10.0);  // the live node is scaled
}

TEST_CASE("normalization: statistics ignore validation and test values") {
    GraphCollection collection = ramp_collection(100, 1);
    const SplitCollections plain = chronological_split(collection, 6, 3);
    // Corrupt the test segment wildly; train-derived statistics cannot move.
    GraphCollection corrupted = collection;
    for (std::size_t t = 80; t < 100; ++t) {
        corrupted.signals[0].values.at3(t, 0, 0) = 1e6;
    }
    const SplitCollections poisoned = chronological_split(corrupted, 6, 3);
    const NormStats a = NormStats::from_split(plain);
    const NormStats b = NormStats::from_split(poisoned);
    CHECK(a.mean(0).at2(0, 0) == b.mean(0).at2(0, 0));
    CHECK(a.scale(0).at2(0, 0) == b.scale(0).at2(0, 0));
}

// ===== Synthetic data =====

TEST_CASE("synthesize_coupled: deterministic for a seed, shapes as requested") {
    const GraphCollection a = synthesize_coupled(21, 3, 4, 60, 0.8);
    const GraphCollection b = synthesize_coupled(21, 3, 4, 60, 0.8);
    REQUIRE(a.graph_count() == 3);
    CHECK(a.target_index() == 0);
    CHECK(a.specs[0].id == "demand");
    CHECK(a.specs[1].id == "ctx1");
    CHECK(a.period_steps == 24);
    CHECK(a.interval_seconds == 3600);
    CHECK(a.length() == 60);
    CHECK(csv::format_timestamp(a.timestamps[0]) == "2024-01-01T00:00:00");
    for (std::size_t g = 0; g < a.graph_count(); ++g) {
        REQUIRE(a.signals[g].values.shape() == std::vector<std::size_t>{60, 4, 1});
        for (std::size_t i = 0; i < a.signals[g].values.size(); ++i) {
            CHECK(a.signals[g].values.data()[i] == b.signals[g].values.data()[i]);
        }
    }
}

TEST_CASE("synthesize_coupled: coupling changes only the target series") {
    const GraphCollection off = synthesize_coupled(33, 3, 3, 80, 0.0);
    const GraphCollection on = synthesize_coupled(33, 3, 3, 80, 0.8);
    CHECK(off.timestamps == on.timestamps);
    for (std::size_t g = 1; g < off.graph_count(); ++g) {
        for (std::size_t i = 0; i < off.signals[g].values.size(); ++i) {
            CHECK(off.signals[g].values.data()[i] == on.signals[g].values.data()[i]);
        }
    }
    double max_difference = 0.0;
    for (std::size_t i = 0; i < off.signals[0].values.size(); ++i) {
        max_difference = std::max(
            max_difference,
            std::abs(off.signals[0].values.data()[i] - on.signals[0].values.data()[i]));
    }
    CHECK(max_difference > 0.1);
}

TEST_CASE("synthesize_coupled: strong coupling leaves a lag-one trace") {
    const GraphCollection coupled = synthesize_coupled(5, 2, 4, 600, 0.8);
    const GraphCollection uncoupled = synthesize_coupled(5, 2, 4, 600, 0.0);

    const auto correlation_at_lag_one = [](const GraphCollection& collection) {
        const std::vector<double> context =
            node_mean_series(collection.signals[1], 0);
        // Remove the daily profile so the periodic part does not mask the
        // context contribution.
        const std::vector<double> target =
            node_mean_series(collection.signals[0], collection.period_steps);
        std::vector<double> lagged(context.begin(), context.end() - 1);
        std::vector<double> lead(target.begin() + 1, target.end());
        return pearson(lagged, lead);
    };

    CHECK(correlation_at_lag_one(coupled) > 0.5);
    CHECK(std::abs(correlation_at_lag_one(uncoupled)) < 0.2);
}

TEST_CASE("synthesize_coupled: rejects out-of-range parameters") {
    CHECK_THROWS_AS(synthesize_coupled(1, 2, 3, 50, 1.5), ConfigError);
    CHECK_THROWS_AS(synthesize_coupled(1, 2, 3, 50, -0.1), ConfigError);
    CHECK_THROWS_AS(synthesize_coupled(1, 0, 3, 50, 0.5), ConfigError);
    CHECK_THROWS_AS(synthesize_coupled(1, 2, 0, 50, 0.5), ConfigError);
    CHECK_NOTHROW(synthesize_coupled(1, 1, 2, 50, 0.5));  // target-only collection
}

TEST_CASE("synthesize_coupled: windows and split compose over synthetic data") {
    const GraphCollection collection = synthesize_coupled(44, 2, 3, 200, 0.8);
    const SplitCollections split = chronological_split(collection, 6, 3);
    const auto train_windows = make_windows(split.train, 6, 3);
    CHECK(train_windows.size() == 140 - 6 - 3 + 1);
    REQUIRE(train_windows.front().inputs.size() == 2);
    CHECK(train_windows.front().inputs[1].shape() == std::vector<std::size_t>{6, 3, 1});
}

}  // TEST_SUITE
