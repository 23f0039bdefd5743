#include "cignn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <numeric>
#include <utility>

#include "cignn/csv.hpp"
#include "cignn/errors.hpp"
#include "cignn/rng.hpp"

namespace cignn {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;

void require_sample_shapes(const ModelArch& arch, const WindowedSample& sample,
                           const char* which) {
    if (sample.inputs.size() != arch.graph_count() ||
        sample.targets.size() != arch.graph_count()) {
        throw DimensionError("train: " + std::string(which) + " sample covers " +
                             std::to_string(sample.inputs.size()) + " graphs, arch has " +
                             std::to_string(arch.graph_count()));
    }
    for (std::size_t i = 0; i < arch.graph_count(); ++i) {
        const std::vector<std::size_t> want_target{arch.horizon, arch.nodes[i],
                                                   arch.features[i]};
        if (sample.targets[i].shape() != want_target) {
            throw DimensionError("train: " + std::string(which) + " target for graph " +
                                 std::to_string(i) + " must be " +
                                 Tensor::shape_string(want_target) + ", got " +
                                 sample.targets[i].shape_string());
        }
    }
}

/// Builds one sample's loss on a fresh tape and returns its value, plus the
/// parameter gradients when requested.
double sample_loss(const ModelArch& arch, const ModelParams& params,
                   const std::vector<std::vector<Tensor>>& bases, const WindowedSample& sample,
                   std::vector<Tensor>* grads_out) {
    Tape tape;
    const BoundParams bound = bind_params(tape, params);
    const auto predictions = model_forward(tape, arch, bound, bases, sample.inputs);
    const Var loss = mae_loss(tape, predictions, sample.targets);
    const double value = tape.value(loss).data()[0];
    if (grads_out != nullptr) {
        GradMap grads = tape.backward(loss);
        grads_out->clear();
        grads_out->reserve(params.count());
        for (std::size_t i = 0; i < params.count(); ++i) {
            grads_out->push_back(std::move(grads.at(bound.vars[i].id)));
        }
    }
    return value;
}

}  // namespace

// ===== Configuration =====

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) {
        throw ConfigError("train: learning rate must be positive");
    }
    if (decay <= 0.0 || decay > 1.0) {
        throw ConfigError("train: decay must lie in (0, 1]");
    }
    if (decay_every == 0 || max_epochs == 0 || batch == 0) {
        throw ConfigError("train: decay interval, epoch limit, and batch size must be positive");
    }
    if (patience == 0 || patience > max_epochs) {
        throw ConfigError("train: patience must lie in [1, max epochs], got " +
                          std::to_string(patience) + " with " + std::to_string(max_epochs) +
                          " epochs");
    }
    if (clip_ceiling <= 0.0) {
        throw ConfigError("train: clip ceiling must be positive");
    }
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) {
    const double steps = std::floor(static_cast<double>(epoch) /
                                    static_cast<double>(config.decay_every));
    return config.learning_rate * std::pow(config.decay, steps);
}

// ===== Logging =====

void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write training log " + path.string());
    }
    out << "epoch,train_mae,val_mae,lr,clipped_steps\n";
    for (const EpochRecord& record : log.epochs) {
        out << record.epoch << "," << csv::format_double(record.train_mae) << ","
            << csv::format_double(record.val_mae) << ","
            << csv::format_double(record.learning_rate) << "," << record.clipped_steps << "\n";
    }
}

// ===== Early stopping =====

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
    if (patience == 0) {
        throw ConfigError("early stopping needs a patience of at least 1");
    }
}

bool EarlyStopper::observe(double val_mae) {
    improved_ = val_mae < best_;
    if (improved_) {
        best_ = val_mae;
        since_best_ = 0;
        return false;
    }
    ++since_best_;
    return since_best_ >= patience_;
}

// ===== Optimizer =====

AdamState::AdamState(const ModelParams& params) {
    first_moment.reserve(params.count());
    second_moment.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        first_moment.emplace_back(params.at(i).shape());
        second_moment.emplace_back(params.at(i).shape());
    }
}

void adam_step(ModelParams& params, AdamState& state, const std::vector<Tensor>& grads,
               double learning_rate) {
    if (grads.size() != params.count()) {
        throw DimensionError("optimizer: got " + std::to_string(grads.size()) +
                             " gradients for " + std::to_string(params.count()) + " parameters");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        for (std::size_t k = 0; k < grads[i].size(); ++k) {
            if (!std::isfinite(grads[i].data()[k])) {
                throw NumericError("optimizer: gradient for parameter \"" + params.name(i) +
                                   "\" is not finite");
            }
        }
    }
    state.step += 1;
    const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < grads.size(); ++i) {
        double* m = state.first_moment[i].data();
        double* v = state.second_moment[i].data();
        double* theta = params.at(i).data();
        const double* g = grads[i].data();
        for (std::size_t k = 0; k < grads[i].size(); ++k) {
            m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
            v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k] * g[k];
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            theta[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + kEpsilon);
        }
    }
}

double global_norm(const std::vector<Tensor>& grads) {
    double squared = 0.0;
    for (const Tensor& grad : grads) {
        for (std::size_t k = 0; k < grad.size(); ++k) {
            squared += grad.data()[k] * grad.data()[k];
        }
    }
    return std::sqrt(squared);
}

bool clip_by_global_norm(std::vector<Tensor>& grads, double ceiling) {
    const double norm = global_norm(grads);
    if (norm <= ceiling) {
        return false;
    }
    const double factor = ceiling / norm;
    for (Tensor& grad : grads) {
        for (std::size_t k = 0; k < grad.size(); ++k) {
            grad.data()[k] *= factor;
        }
    }
    return true;
}

// ===== Loss =====

Var mae_loss(Tape& tape, const std::vector<std::vector<Var>>& predictions,
             const std::vector<Tensor>& targets) {
    if (predictions.size() != targets.size() || predictions.empty()) {
        throw DimensionError("loss: got predictions for " + std::to_string(predictions.size()) +
                             " graphs and targets for " + std::to_string(targets.size()));
    }
    Var total;
    std::size_t entries = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const Tensor& target = targets[i];
        if (target.rank() != 3 || target.shape()[0] != predictions[i].size()) {
            throw DimensionError("loss: graph " + std::to_string(i) + " has " +
                                 std::to_string(predictions[i].size()) +
                                 " horizon predictions but targets of shape " +
                                 target.shape_string());
        }
        const std::size_t span = target.shape()[1] * target.shape()[2];
        for (std::size_t h = 0; h < predictions[i].size(); ++h) {
            Tensor slice({target.shape()[1], target.shape()[2]});
            std::copy(target.data() + h * span, target.data() + (h + 1) * span, slice.data());
            const Var diff = tape.sub(predictions[i][h], tape.constant(std::move(slice)));
            const Var term = tape.sum(tape.abs(diff));
            total = total.valid() ? tape.add(total, term) : term;
            entries += span;
        }
    }
    return tape.scale(total, 1.0 / static_cast<double>(entries));
}

double evaluate_mae(const ModelArch& arch, const ModelParams& params,
                    const std::vector<std::vector<Tensor>>& bases,
                    const std::vector<WindowedSample>& samples) {
    if (samples.empty()) {
        throw DataError("evaluate: no samples");
    }
    double sum = 0.0;
    for (const WindowedSample& sample : samples) {
        sum += sample_loss(arch, params, bases, sample, nullptr);
    }
    return sum / static_cast<double>(samples.size());
}

// ===== Training loop =====

TrainResult train_model(const ModelArch& arch, const TrainConfig& config,
                        const std::vector<std::vector<Tensor>>& bases, const TrainData& data) {
    arch.validate();
    config.validate();
    if (data.train.empty()) {
        throw DataError("train: no training samples");
    }
    if (data.validation.empty()) {
        throw DataError("train: no validation samples");
    }
    for (const WindowedSample& sample : data.train) {
        require_sample_shapes(arch, sample, "train");
    }
    for (const WindowedSample& sample : data.validation) {
        require_sample_shapes(arch, sample, "validation");
    }

    Rng master(config.seed);
    const std::uint64_t init_seed = master.bits();
    Rng shuffle_rng = master.fork();

    ModelParams params = ModelParams::init(arch, init_seed);
    ModelParams best_params = params;
    AdamState optimizer(params);
    EarlyStopper stopper(config.patience);
    TrainLog log;

    const std::size_t sample_count = data.train.size();
    const std::size_t batch_size = std::min(config.batch, sample_count);
    std::vector<std::size_t> order(sample_count);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> batch_losses(batch_size);
    std::vector<std::vector<Tensor>> batch_grads(batch_size);

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        const double lr = learning_rate_at(config, epoch);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t clipped_steps = 0;
        for (std::size_t begin = 0; begin < sample_count; begin += batch_size) {
            const std::size_t count = std::min(batch_size, sample_count - begin);

            // Per-sample passes are independent; the reduction below runs in
            // sample order, so results do not depend on the thread count.
            std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
            for (std::size_t s = 0; s < count; ++s) {
                try {
                    batch_losses[s] = sample_loss(arch, params, bases,
                                                  data.train[order[begin + s]], &batch_grads[s]);
                } catch (...) {
#pragma omp critical
                    if (failure == nullptr) {
                        failure = std::current_exception();
                    }
                }
            }
            if (failure != nullptr) {
                std::rethrow_exception(failure);
            }

            std::vector<Tensor> grads = std::move(batch_grads[0]);
            loss_sum += batch_losses[0];
            for (std::size_t s = 1; s < count; ++s) {
                for (std::size_t i = 0; i < grads.size(); ++i) {
                    const Tensor& extra = batch_grads[s][i];
                    for (std::size_t k = 0; k < grads[i].size(); ++k) {
                        grads[i].data()[k] += extra.data()[k];
                    }
                }
                loss_sum += batch_losses[s];
            }
            const double inverse = 1.0 / static_cast<double>(count);
            for (Tensor& grad : grads) {
                for (std::size_t k = 0; k < grad.size(); ++k) {
                    grad.data()[k] *= inverse;
                }
            }
            if (config.clip_gradients && clip_by_global_norm(grads, config.clip_ceiling)) {
                ++clipped_steps;
            }
            adam_step(params, optimizer, grads, lr);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_mae = loss_sum / static_cast<double>(sample_count);
        record.val_mae = evaluate_mae(arch, params, bases, data.validation);
        record.learning_rate = lr;
        record.clipped_steps = clipped_steps;
        log.epochs.push_back(record);

        const bool stop = stopper.observe(record.val_mae);
        if (stopper.improved_last()) {
            best_params = params;
            log.best_epoch = epoch;
            log.best_val_mae = record.val_mae;
        }

        // Wall-clock timing is progress chatter only; it never reaches the
        // log structure, keeping artifacts reproducible.
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::cerr << "epoch " << epoch << ": train " << record.train_mae << ", val "
                  << record.val_mae << ", lr " << lr << " (" << seconds << "s)\n";

        if (stop) {
            log.stopped_early = true;
            break;
        }
    }

    return TrainResult{std::move(best_params), std::move(log)};
}

}  // namespace cignn
