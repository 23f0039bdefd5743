#include "cignn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cignn/csv.hpp"
#include "cignn/errors.hpp"
#include "cignn/kernels.hpp"

namespace cignn {

namespace {

constexpr double kRidge = 1e-6;

}  // namespace

// ===== Point metrics =====

double mean_absolute_error(const Tensor& prediction, const Tensor& actual) {
    ErrorAccumulator acc;
    acc.add(prediction, actual);
    return acc.mae();
}

double root_mean_squared_error(const Tensor& prediction, const Tensor& actual) {
    ErrorAccumulator acc;
    acc.add(prediction, actual);
    return acc.rmse();
}

void ErrorAccumulator::add(const Tensor& prediction, const Tensor& actual) {
    require_same_shape(prediction, actual, "error accumulation");
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        add_error(prediction[i] - actual[i]);
    }
}

void ErrorAccumulator::add_error(double error) {
    abs_sum_ += std::abs(error);
    square_sum_ += error * error;
    ++count_;
}

double ErrorAccumulator::mae() const {
    if (count_ == 0) {
        throw DataError("cannot compute a mean error over zero entries");
    }
    return abs_sum_ / static_cast<double>(count_);
}

double ErrorAccumulator::rmse() const {
    if (count_ == 0) {
        throw DataError("cannot compute a mean error over zero entries");
    }
    return std::sqrt(square_sum_ / static_cast<double>(count_));
}

// ===== Naive predictors =====

Tensor persistence_forecast(const Tensor& window, std::size_t horizon) {
    if (window.rank() != 3) {
        throw DimensionError("persistence expects a (steps, nodes, features) window, got " +
                             window.shape_string());
    }
    if (horizon == 0) {
        throw ConfigError("persistence horizon must be positive");
    }
    const std::size_t nodes = window.dim(1);
    const std::size_t features = window.dim(2);
    const std::size_t step_size = nodes * features;
    const double* last = window.data() + (window.dim(0) - 1) * step_size;
    Tensor out({horizon, nodes, features});
    for (std::size_t h = 0; h < horizon; ++h) {
        std::copy(last, last + step_size, out.data() + h * step_size);
    }
    return out;
}

Tensor historical_average(const Tensor& series, std::size_t index, std::size_t period_steps,
                          std::size_t lookback) {
    if (series.rank() != 3) {
        throw DimensionError("historical average expects a (steps, nodes, features) series, got " +
                             series.shape_string());
    }
    if (period_steps == 0) {
        throw ConfigError("historical average needs a positive period length");
    }
    if (lookback == 0) {
        throw ConfigError("historical average needs a positive lookback");
    }
    if (index >= series.dim(0)) {
        throw DataError("historical average index " + std::to_string(index) +
                        " is outside the series (length " + std::to_string(series.dim(0)) + ")");
    }
    const std::size_t nodes = series.dim(1);
    const std::size_t features = series.dim(2);
    const std::size_t step_size = nodes * features;
    Tensor out({nodes, features});
    std::size_t used = 0;
    for (std::size_t back = 1; back <= lookback; ++back) {
        if (index < back * period_steps) {
            break;
        }
        const double* step = series.data() + (index - back * period_steps) * step_size;
        for (std::size_t i = 0; i < step_size; ++i) {
            out[i] += step[i];
        }
        ++used;
    }
    if (used == 0) {
        throw DataError("historical average at step " + std::to_string(index) +
                        " has no earlier observation one period (" + std::to_string(period_steps) +
                        " steps) back");
    }
    for (std::size_t i = 0; i < step_size; ++i) {
        out[i] /= static_cast<double>(used);
    }
    return out;
}

// ===== Vector autoregression =====

namespace {

/// In-place lower Cholesky factor of a symmetric matrix. Returns false when
/// a pivot degenerates (the matrix is not numerically positive definite).
bool cholesky_factor(Tensor& m) {
    const std::size_t n = m.dim(0);
    double diag_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diag_max = std::max(diag_max, std::abs(m.at2(i, i)));
    }
    const double floor = std::max(diag_max, 1.0) * 1e-13;
    for (std::size_t j = 0; j < n; ++j) {
        double d = m.at2(j, j);
        for (std::size_t k = 0; k < j; ++k) {
            d -= m.at2(j, k) * m.at2(j, k);
        }
        if (!(d > floor)) {
            return false;
        }
        const double l = std::sqrt(d);
        m.at2(j, j) = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = m.at2(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                v -= m.at2(i, k) * m.at2(j, k);
            }
            m.at2(i, j) = v / l;
        }
        for (std::size_t k = j + 1; k < n; ++k) {
            m.at2(j, k) = 0.0;
        }
    }
    return true;
}

/// Solves L L^T x = rhs in place given the lower factor.
void cholesky_solve(const Tensor& l, std::vector<double>& rhs) {
    const std::size_t n = l.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = rhs[i];
        for (std::size_t k = 0; k < i; ++k) {
            v -= l.at2(i, k) * rhs[k];
        }
        rhs[i] = v / l.at2(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = rhs[ii];
        for (std::size_t k = ii + 1; k < n; ++k) {
            v -= l.at2(k, ii) * rhs[k];
        }
        rhs[ii] = v / l.at2(ii, ii);
    }
}

}  // namespace

VarModel VarModel::fit(const std::vector<std::vector<double>>& observations, std::size_t lag) {
    if (lag == 0) {
        throw ConfigError("autoregression lag must be positive");
    }
    if (observations.empty() || observations.front().empty()) {
        throw DataError("autoregression needs a non-empty observation sequence");
    }
    const std::size_t total = observations.size();
    const std::size_t n = observations.front().size();
    for (std::size_t t = 0; t < total; ++t) {
        if (observations[t].size() != n) {
            throw DimensionError("observation " + std::to_string(t) + " has " +
                                 std::to_string(observations[t].size()) + " variables, expected " +
                                 std::to_string(n));
        }
    }
    if (total <= n * lag + 1) {
        throw DataError("autoregression over " + std::to_string(n) + " variables at lag " +
                        std::to_string(lag) + " needs more than " + std::to_string(n * lag + 1) +
                        " observations, got " + std::to_string(total));
    }

    // One regression row per predictable step: [1, x_{t-1}, ..., x_{t-lag}].
    const std::size_t rows = total - lag;
    const std::size_t cols = 1 + n * lag;
    Tensor design({rows, cols});
    Tensor response({rows, n});
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = lag + r;
        design.at2(r, 0) = 1.0;
        for (std::size_t back = 1; back <= lag; ++back) {
            for (std::size_t v = 0; v < n; ++v) {
                design.at2(r, 1 + (back - 1) * n + v) = observations[t - back][v];
            }
        }
        for (std::size_t v = 0; v < n; ++v) {
            response.at2(r, v) = observations[t][v];
        }
    }

    Tensor gram = kernels::matmul(design, design, /*trans_a=*/true);
    const Tensor moment = kernels::matmul(design, response, /*trans_a=*/true);

    Tensor factor = gram;
    if (!cholesky_factor(factor)) {
        std::cerr << "warning: autoregression normal equations are singular; "
                  << "adding ridge " << kRidge << " to the diagonal\n";
        factor = gram;
        for (std::size_t i = 0; i < cols; ++i) {
            factor.at2(i, i) += kRidge;
        }
        if (!cholesky_factor(factor)) {
            throw NumericError("autoregression normal equations remain singular after ridge");
        }
    }

    VarModel model;
    model.lag_ = lag;
    model.intercept_.assign(n, 0.0);
    model.coefficients_.assign(lag, Tensor({n, n}));
    std::vector<double> column(cols);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t c = 0; c < cols; ++c) {
            column[c] = moment.at2(c, v);
        }
        cholesky_solve(factor, column);
        model.intercept_[v] = column[0];
        for (std::size_t back = 1; back <= lag; ++back) {
            for (std::size_t j = 0; j < n; ++j) {
                model.coefficients_[back - 1].at2(v, j) = column[1 + (back - 1) * n + j];
            }
        }
    }
    return model;
}

std::vector<double> VarModel::step(const std::vector<std::vector<double>>& recent) const {
    const std::size_t n = variable_count();
    if (recent.size() < lag_) {
        throw DataError("autoregression at lag " + std::to_string(lag_) + " needs " +
                        std::to_string(lag_) + " recent observations, got " +
                        std::to_string(recent.size()));
    }
    std::vector<double> out = intercept_;
    for (std::size_t back = 1; back <= lag_; ++back) {
        const std::vector<double>& past = recent[recent.size() - back];
        if (past.size() != n) {
            throw DimensionError("recent observation has " + std::to_string(past.size()) +
                                 " variables, expected " + std::to_string(n));
        }
        const Tensor& a = coefficients_[back - 1];
        for (std::size_t i = 0; i < n; ++i) {
            double v = out[i];
            for (std::size_t j = 0; j < n; ++j) {
                v += a.at2(i, j) * past[j];
            }
            out[i] = v;
        }
    }
    return out;
}

std::vector<std::vector<double>> VarModel::forecast(const std::vector<std::vector<double>>& recent,
                                                    std::size_t horizon) const {
    std::vector<std::vector<double>> history(recent);
    std::vector<std::vector<double>> out;
    out.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        out.push_back(step(history));
        history.push_back(out.back());
    }
    return out;
}

// ===== Forecast reports =====

const GraphReport& ForecastReport::target() const {
    for (const GraphReport& graph : graphs) {
        if (graph.is_target) {
            return graph;
        }
    }
    throw DataError("forecast report has no target graph");
}

namespace {

HorizonMetrics metrics_of(const ErrorAccumulator& acc) {
    HorizonMetrics m;
    m.mae = acc.mae();
    m.rmse = acc.rmse();
    m.count = acc.count();
    return m;
}

/// The (nodes, features) slice of step `h` of a (steps, nodes, features)
/// tensor.
Tensor step_slice(const Tensor& block, std::size_t h) {
    const std::size_t step_size = block.dim(1) * block.dim(2);
    Tensor out({block.dim(1), block.dim(2)});
    std::copy(block.data() + h * step_size, block.data() + (h + 1) * step_size, out.data());
    return out;
}

}  // namespace

ForecastReport evaluate_model(const ModelParams& params,
                              const std::vector<std::vector<Tensor>>& bases,
                              const GraphCollection& test_raw, const NormStats& stats) {
    const ModelArch& arch = params.arch();
    const std::size_t graphs = arch.graph_count();
    if (test_raw.graph_count() != graphs) {
        throw DimensionError("evaluation data has " + std::to_string(test_raw.graph_count()) +
                             " graphs, model has " + std::to_string(graphs));
    }
    if (stats.graph_count() != graphs) {
        throw DimensionError("normalization statistics cover " +
                             std::to_string(stats.graph_count()) + " graphs, model has " +
                             std::to_string(graphs));
    }
    for (std::size_t g = 0; g < graphs; ++g) {
        const GraphSignal& signal = test_raw.signals[g];
        if (signal.node_count() != arch.nodes[g] || signal.feature_count() != arch.features[g]) {
            throw DimensionError("graph '" + signal.graph_id + "' is " +
                                 std::to_string(signal.node_count()) + " nodes x " +
                                 std::to_string(signal.feature_count()) +
                                 " features; the model expects " + std::to_string(arch.nodes[g]) +
                                 " x " + std::to_string(arch.features[g]));
        }
    }

    const GraphCollection normalized = stats.normalize(test_raw);
    const std::vector<WindowedSample> inputs = make_windows(normalized, arch.window, arch.horizon);
    const std::vector<WindowedSample> actuals = make_windows(test_raw, arch.window, arch.horizon);

    std::vector<std::vector<ErrorAccumulator>> per_horizon(
        graphs, std::vector<ErrorAccumulator>(arch.horizon));
    std::vector<ErrorAccumulator> pooled(graphs);

    for (std::size_t s = 0; s < inputs.size(); ++s) {
        Tape tape;
        const BoundParams bound = bind_params(tape, params);
        const std::vector<std::vector<Var>> predictions =
            model_forward(tape, arch, bound, bases, inputs[s].inputs);
        for (std::size_t g = 0; g < graphs; ++g) {
            for (std::size_t h = 0; h < arch.horizon; ++h) {
                const Tensor& normalized_step = tape.value(predictions[g][h]);
                Tensor lifted({1, arch.nodes[g], arch.features[g]},
                              std::vector<double>(normalized_step.data(),
                                                  normalized_step.data() + normalized_step.size()));
                const Tensor denormalized = stats.denormalize_values(g, lifted);
                const Tensor actual = step_slice(actuals[s].targets[g], h);
                for (std::size_t i = 0; i < actual.size(); ++i) {
                    const double error = denormalized[i] - actual[i];
                    per_horizon[g][h].add_error(error);
                    pooled[g].add_error(error);
                }
            }
        }
    }

    ForecastReport report;
    report.sample_count = inputs.size();
    report.graphs.resize(graphs);
    for (std::size_t g = 0; g < graphs; ++g) {
        GraphReport& graph = report.graphs[g];
        graph.graph_id = test_raw.specs[g].id;
        graph.is_target = test_raw.specs[g].is_target;
        graph.per_horizon.reserve(arch.horizon);
        for (std::size_t h = 0; h < arch.horizon; ++h) {
            graph.per_horizon.push_back(metrics_of(per_horizon[g][h]));
        }
        graph.overall = metrics_of(pooled[g]);
    }
    return report;
}

namespace {

/// Target-graph series of a split, re-joined in time order. The split
/// segments are consecutive slices of one recording, so concatenation
/// restores the original series.
Tensor joined_target_series(const SplitCollections& split, std::size_t* train_length,
                            std::size_t* validation_length) {
    const std::size_t target = split.train.target_index();
    const GraphSignal& train = split.train.signals[target];
    const GraphSignal& validation = split.validation.signals[target];
    const GraphSignal& test = split.test.signals[target];
    *train_length = train.length();
    *validation_length = validation.length();
    const std::size_t total = train.length() + validation.length() + test.length();
    Tensor out({total, train.node_count(), train.feature_count()});
    double* cursor = out.data();
    for (const GraphSignal* part : {&train, &validation, &test}) {
        cursor = std::copy(part->values.data(), part->values.data() + part->values.size(), cursor);
    }
    return out;
}

/// Flattens step `t` of a (T, N, P) series into an N*P observation row.
std::vector<double> observation_row(const Tensor& series, std::size_t t) {
    const std::size_t step_size = series.dim(1) * series.dim(2);
    const double* begin = series.data() + t * step_size;
    return std::vector<double>(begin, begin + step_size);
}

struct BaselineAccumulators {
    explicit BaselineAccumulators(std::size_t horizon) : per_horizon(horizon) {}

    std::vector<ErrorAccumulator> per_horizon;
    ErrorAccumulator pooled;

    void add(std::size_t h, double error) {
        per_horizon[h].add_error(error);
        pooled.add_error(error);
    }

    BaselineReport report(const std::string& name) const {
        BaselineReport out;
        out.name = name;
        out.per_horizon.reserve(per_horizon.size());
        for (const ErrorAccumulator& acc : per_horizon) {
            if (acc.count() == 0) {
                out.per_horizon.push_back(std::nullopt);
            } else {
                out.per_horizon.push_back(metrics_of(acc));
            }
        }
        if (pooled.count() > 0) {
            out.overall = metrics_of(pooled);
        }
        return out;
    }
};

}  // namespace

std::vector<BaselineReport> evaluate_baselines(const SplitCollections& split, std::size_t window,
                                               std::size_t horizon, std::size_t period_steps,
                                               std::size_t var_lag) {
    if (window == 0 || horizon == 0) {
        throw ConfigError("baseline evaluation needs positive window and horizon");
    }
    std::size_t train_length = 0;
    std::size_t validation_length = 0;
    const Tensor series = joined_target_series(split, &train_length, &validation_length);
    const std::size_t test_begin = train_length + validation_length;
    const std::size_t total = series.dim(0);
    const std::size_t step_size = series.dim(1) * series.dim(2);
    if (total < test_begin + window + horizon) {
        throw DataError("test segment is shorter than one window plus horizon");
    }

    const std::size_t lag = var_lag == 0 ? window : var_lag;
    std::vector<std::vector<double>> train_rows;
    train_rows.reserve(train_length);
    for (std::size_t t = 0; t < train_length; ++t) {
        train_rows.push_back(observation_row(series, t));
    }
    const VarModel var = VarModel::fit(train_rows, lag);

    const bool with_history_average = period_steps > 0;
    if (!with_history_average) {
        std::cerr << "note: seasonal period unknown; skipping the historical-average baseline\n";
    }

    BaselineAccumulators persistence(horizon);
    BaselineAccumulators history(horizon);
    BaselineAccumulators autoregression(horizon);

    // Score on exactly the windows the model sees: inputs and targets both
    // inside the test segment.
    const std::size_t sample_count = total - test_begin - window - horizon + 1;
    for (std::size_t k = 0; k < sample_count; ++k) {
        const std::size_t origin = test_begin + window - 1 + k;  // last observed step

        // Persistence: repeat the origin step.
        const double* last = series.data() + origin * step_size;
        for (std::size_t h = 0; h < horizon; ++h) {
            const double* actual = series.data() + (origin + 1 + h) * step_size;
            for (std::size_t i = 0; i < step_size; ++i) {
                persistence.add(h, last[i] - actual[i]);
            }
        }

        // Historical average: one step ahead only.
        if (with_history_average) {
            const Tensor predicted = historical_average(series, origin + 1, period_steps);
            const double* actual = series.data() + (origin + 1) * step_size;
            for (std::size_t i = 0; i < step_size; ++i) {
                history.add(0, predicted[i] - actual[i]);
            }
        }

        // Autoregression: iterate from the true trailing observations.
        std::vector<std::vector<double>> recent;
        recent.reserve(lag);
        for (std::size_t back = lag; back >= 1; --back) {
            recent.push_back(observation_row(series, origin + 1 - back));
        }
        const std::vector<std::vector<double>> forecast = var.forecast(recent, horizon);
        for (std::size_t h = 0; h < horizon; ++h) {
            const double* actual = series.data() + (origin + 1 + h) * step_size;
            for (std::size_t i = 0; i < step_size; ++i) {
                autoregression.add(h, forecast[h][i] - actual[i]);
            }
        }
    }

    std::vector<BaselineReport> reports;
    reports.push_back(persistence.report("persistence"));
    reports.push_back(history.report("historical-average"));
    reports.push_back(autoregression.report("var"));
    return reports;
}

// ===== Report output =====

namespace {

void append_row(std::string& out, const std::string& predictor, const std::string& graph,
                const std::string& horizon, const HorizonMetrics& m) {
    out += predictor;
    out += ',';
    out += graph;
    out += ',';
    out += horizon;
    out += ',';
    out += csv::format_double(m.mae);
    out += ',';
    out += csv::format_double(m.rmse);
    out += '\n';
}

}  // namespace

void write_report_csv(const ForecastReport& model_report,
                      const std::vector<BaselineReport>& baselines,
                      const std::filesystem::path& path) {
    std::string out = "predictor,graph,horizon,mae,rmse\n";
    for (const GraphReport& graph : model_report.graphs) {
        for (std::size_t h = 0; h < graph.per_horizon.size(); ++h) {
            append_row(out, "model", graph.graph_id, std::to_string(h + 1), graph.per_horizon[h]);
        }
        append_row(out, "model", graph.graph_id, "overall", graph.overall);
    }
    const std::string target_id = model_report.graphs.empty() ? std::string("target")
                                                              : model_report.target().graph_id;
    for (const BaselineReport& baseline : baselines) {
        for (std::size_t h = 0; h < baseline.per_horizon.size(); ++h) {
            if (baseline.per_horizon[h].has_value()) {
                append_row(out, baseline.name, target_id, std::to_string(h + 1),
                           *baseline.per_horizon[h]);
            }
        }
        if (baseline.overall.has_value()) {
            append_row(out, baseline.name, target_id, "overall", *baseline.overall);
        }
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw InputError("cannot open '" + path.string() + "' for writing");
    }
    file << out;
    if (!file) {
        throw InputError("failed to write '" + path.string() + "'");
    }
}

namespace {

std::string fixed6(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6f", v);
    return buffer;
}

void table_row(std::ostringstream& out, const std::string& predictor, const std::string& graph,
               const std::string& horizon, const std::string& mae, const std::string& rmse) {
    out << "  ";
    out.width(20);
    out << std::left << predictor;
    out.width(12);
    out << std::left << graph;
    out.width(9);
    out << std::left << horizon;
    out.width(14);
    out << std::right << mae;
    out.width(14);
    out << std::right << rmse;
    out << '\n';
}

}  // namespace

std::string format_report_table(const ForecastReport& model_report,
                                const std::vector<BaselineReport>& baselines) {
    std::ostringstream out;
    table_row(out, "predictor", "graph", "horizon", "mae", "rmse");
    table_row(out, "---------", "-----", "-------", "---", "----");
    for (const GraphReport& graph : model_report.graphs) {
        for (std::size_t h = 0; h < graph.per_horizon.size(); ++h) {
            const HorizonMetrics& m = graph.per_horizon[h];
            table_row(out, "model", graph.graph_id, std::to_string(h + 1), fixed6(m.mae),
                      fixed6(m.rmse));
        }
        table_row(out, "model", graph.graph_id, "overall", fixed6(graph.overall.mae),
                  fixed6(graph.overall.rmse));
    }
    const std::string target_id = model_report.graphs.empty() ? std::string("target")
                                                              : model_report.target().graph_id;
    for (const BaselineReport& baseline : baselines) {
        for (std::size_t h = 0; h < baseline.per_horizon.size(); ++h) {
            if (baseline.per_horizon[h].has_value()) {
                const HorizonMetrics& m = *baseline.per_horizon[h];
                table_row(out, baseline.name, target_id, std::to_string(h + 1), fixed6(m.mae),
                          fixed6(m.rmse));
            }
        }
        if (baseline.overall.has_value()) {
            table_row(out, baseline.name, target_id, "overall", fixed6(baseline.overall->mae),
                      fixed6(baseline.overall->rmse));
        }
    }
    return out.str();
}

}  // namespace cignn
