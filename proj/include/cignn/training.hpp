#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "cignn/autodiff.hpp"
#include "cignn/data.hpp"
#include "cignn/model.hpp"
#include "cignn/tensor.hpp"

namespace cignn {

// ===== Configuration =====

struct TrainConfig {
    double learning_rate = 0.01;
    double decay = 0.1;            // multiplied in every decay_every epochs
    std::size_t decay_every = 10;  // epochs per decay step
    std::size_t max_epochs = 100;
    std::size_t patience = 10;  // epochs without validation improvement
    std::size_t batch = 32;     // capped at the training-set size
    std::uint64_t seed = 0;
    // Off by default; when on, batch gradients are rescaled to a global
    // norm of at most clip_ceiling before each optimizer step.
    bool clip_gradients = false;
    double clip_ceiling = 5.0;

    void validate() const;
};

/// Stepped decay schedule: learning_rate * decay^floor(epoch / decay_every),
/// epochs counted from zero.
double learning_rate_at(const TrainConfig& config, std::size_t epoch);

// ===== Logging =====

struct EpochRecord {
    std::size_t epoch = 0;  // zero-based
    double train_mae = 0.0;
    double val_mae = 0.0;
    double learning_rate = 0.0;
    std::size_t clipped_steps = 0;  // batches that hit the norm ceiling
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // epoch whose parameters were kept
    double best_val_mae = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
};

/// Deterministic CSV: one row per epoch, shortest round-trip numbers, no
/// wall-clock data, so identical runs write identical bytes.
void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path);

// ===== Early stopping =====

/// Stops after `patience` consecutive epochs without a strict improvement of
/// the best validation error seen so far (ties count as no improvement).
class EarlyStopper {
  public:
    explicit EarlyStopper(std::size_t patience);

    /// Feeds one epoch's validation error; returns true when training
    /// should stop after this epoch.
    bool observe(double val_mae);

    bool improved_last() const { return improved_; }
    double best() const { return best_; }
    std::size_t epochs_since_best() const { return since_best_; }

  private:
    std::size_t patience_;
    std::size_t since_best_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
    bool improved_ = false;
};

// ===== Optimizer =====

/// Adam moment buffers, one pair per parameter tensor.
struct AdamState {
    explicit AdamState(const ModelParams& params);

    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::size_t step = 0;
};

/// One Adam update in place (beta1 0.9, beta2 0.999, epsilon 1e-8) with
/// bias-corrected moments.  `grads` aligns with the registration order.
/// A non-finite gradient aborts with a NumericError naming the parameter.
void adam_step(ModelParams& params, AdamState& state, const std::vector<Tensor>& grads,
               double learning_rate);

double global_norm(const std::vector<Tensor>& grads);

/// Rescales so the global norm is at most `ceiling`; returns whether it fired.
bool clip_by_global_norm(std::vector<Tensor>& grads, double ceiling);

// ===== Loss =====

/// Mean absolute error over every graph, horizon step, node, and feature of
/// one sample: predictions[i][h] is (N_i, P_i), targets[i] is (T_h, N_i, P_i).
Var mae_loss(Tape& tape, const std::vector<std::vector<Var>>& predictions,
             const std::vector<Tensor>& targets);

/// Forward-only mean absolute error of `params` over a sample set (mean of
/// per-sample losses).
double evaluate_mae(const ModelArch& arch, const ModelParams& params,
                    const std::vector<std::vector<Tensor>>& bases,
                    const std::vector<WindowedSample>& samples);

// ===== Training loop =====

struct TrainData {
    std::vector<WindowedSample> train;
    std::vector<WindowedSample> validation;
};

struct TrainResult {
    ModelParams params;  // parameters of the best validation epoch
    TrainLog log;
};

/// Seeded end-to-end loop: initialize, shuffle each epoch, average per-sample
/// gradients over each batch, Adam-update with the stepped schedule, evaluate
/// validation loss, and stop early when it stalls.  The parameters returned
/// are the ones from the best validation epoch.  Identical configs and data
/// produce bit-identical results; progress lines go to stderr only.
TrainResult train_model(const ModelArch& arch, const TrainConfig& config,
                        const std::vector<std::vector<Tensor>>& bases, const TrainData& data);

}  // namespace cignn
