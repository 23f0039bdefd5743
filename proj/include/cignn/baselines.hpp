#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cignn/data.hpp"
#include "cignn/model.hpp"
#include "cignn/tensor.hpp"

namespace cignn {

// ===== Point metrics =====

/// Mean absolute error over all entries; shapes must match.
double mean_absolute_error(const Tensor& prediction, const Tensor& actual);

/// Root mean squared error over all entries; shapes must match.  Never less
/// than the mean absolute error on the same inputs.
double root_mean_squared_error(const Tensor& prediction, const Tensor& actual);

/// Streams prediction/actual pairs into pooled MAE and RMSE, so reports can
/// aggregate across samples without keeping every error.
class ErrorAccumulator {
  public:
    void add(const Tensor& prediction, const Tensor& actual);
    void add_error(double error);

    std::size_t count() const { return count_; }
    double mae() const;
    double rmse() const;

  private:
    double abs_sum_ = 0.0;
    double square_sum_ = 0.0;
    std::size_t count_ = 0;
};

// ===== Naive predictors =====

/// Repeats the window's last step for every horizon step: a (window, N, P)
/// history becomes a (horizon, N, P) forecast of constant value.
Tensor persistence_forecast(const Tensor& window, std::size_t horizon);

/// Mean of the observations one, two, ... `lookback` periods before `index`
/// in a (T, N, P) series.  Phases that would fall before the start of the
/// series are skipped; when every one of them does — no earlier same-phase
/// observation exists at all — a DataError explains the insufficient
/// history.  A one-step-ahead predictor only: it has no mechanism for
/// horizons beyond the next step.
Tensor historical_average(const Tensor& series, std::size_t index, std::size_t period_steps,
                          std::size_t lookback = 4);

// ===== Vector autoregression =====

/// Linear one-step model x_t = c + sum_k A_k x_{t-k}, fitted by least
/// squares on the normal equations (Cholesky).  A singular system falls back
/// to a small ridge with a stderr warning instead of failing.  Observations
/// are time-major: observations[t][v] is variable v at step t.
class VarModel {
  public:
    /// Fits on a training sequence.  Requires more observations than
    /// unknowns per equation (length > variables * lag + 1).
    static VarModel fit(const std::vector<std::vector<double>>& observations, std::size_t lag);

    std::size_t lag() const { return lag_; }
    std::size_t variable_count() const { return intercept_.size(); }
    const std::vector<double>& intercept() const { return intercept_; }

    /// Matrix multiplying x_{t-1-back}; `back` counts steps into the past,
    /// so coefficient(0) is A_1.
    const Tensor& coefficient(std::size_t back) const { return coefficients_.at(back); }

    /// One-step forecast from the trailing `lag` rows of `recent`
    /// (time-major, oldest first).
    std::vector<double> step(const std::vector<std::vector<double>>& recent) const;

    /// Iterated forecast: each step feeds the previous predictions back in
    /// as history.  Returns horizon rows, time-major.
    std::vector<std::vector<double>> forecast(const std::vector<std::vector<double>>& recent,
                                              std::size_t horizon) const;

  private:
    VarModel() = default;

    std::size_t lag_ = 0;
    std::vector<double> intercept_;     // c, one entry per variable
    std::vector<Tensor> coefficients_;  // A_1..A_lag, each (N, N)
};

// ===== Forecast reports =====

struct HorizonMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t count = 0;  // pooled error entries
};

struct GraphReport {
    std::string graph_id;
    bool is_target = false;
    std::vector<HorizonMetrics> per_horizon;  // index h = step h+1 ahead
    HorizonMetrics overall;                   // pooled across horizons
};

struct ForecastReport {
    std::vector<GraphReport> graphs;  // collection order
    std::size_t sample_count = 0;

    const GraphReport& target() const;
};

/// Runs the model over every test window and pools denormalized errors per
/// graph and horizon.  Inputs are normalized with the training statistics;
/// predictions are mapped back to original units before scoring, so the
/// numbers are comparable with the baselines and with the raw data.
ForecastReport evaluate_model(const ModelParams& params,
                              const std::vector<std::vector<Tensor>>& bases,
                              const GraphCollection& test_raw, const NormStats& stats);

/// One baseline's scores on the target graph.  Entries are absent at
/// horizons the method cannot produce (the historical average only ever
/// predicts one step ahead).
struct BaselineReport {
    std::string name;
    std::vector<std::optional<HorizonMetrics>> per_horizon;
    std::optional<HorizonMetrics> overall;  // pooled over produced horizons
};

/// Scores persistence, historical-average, and vector-autoregression
/// baselines on exactly the windows evaluate_model scores the model on.
/// Baselines see only the target graph's series: the autoregression is
/// fitted on the training segment, and the historical average reads every
/// step that precedes the one it predicts.  `var_lag` zero means "use
/// `window`"; `period_steps` zero skips the historical average with a
/// stderr note (the period is unknown).
std::vector<BaselineReport> evaluate_baselines(const SplitCollections& split, std::size_t window,
                                               std::size_t horizon, std::size_t period_steps,
                                               std::size_t var_lag = 0);

// ===== Report output =====

/// Deterministic CSV with one row per (predictor, graph, horizon) plus
/// pooled "overall" rows: predictor,graph,horizon,mae,rmse.
void write_report_csv(const ForecastReport& model_report,
                      const std::vector<BaselineReport>& baselines,
                      const std::filesystem::path& path);

/// Fixed-width table of the same numbers for terminal output.
std::string format_report_table(const ForecastReport& model_report,
                                const std::vector<BaselineReport>& baselines);

}  // namespace cignn
