#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "multifuser/metrics.h"
#include "multifuser/model.h"
#include "multifuser/synthetic_data.h"

namespace multifuser {

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 16;
    double learning_rate = 1e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

// Adam moments, one buffer per model parameter in parameters() order.
struct AdamWState {
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;

    static AdamWState zeros_like(const ParamList& params);
    bool operator==(const AdamWState&) const = default;
};

// Decoupled weight decay: theta -= lr * wd * theta, then the bias-corrected
// Adam step. Gradients are multiplied by `grad_scale` first and cleared after.
void adamw_step(const ParamList& params, AdamWState& state, const TrainConfig& config, double grad_scale);

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;      // mean cross-entropy over the epoch's samples
    double top1 = 0.0;      // on-the-fly training predictions
    double mean1 = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
};

// Sample visiting order of one epoch; a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t samples, std::uint64_t seed, std::size_t epoch);

// Stateful loop so training can be paused, checkpointed, and resumed.
class Trainer {
  public:
    Trainer(MultiFuserModel& model, TrainConfig config);
    Trainer(MultiFuserModel& model, TrainConfig config, AdamWState state, std::size_t epochs_done);

    EpochStats run_epoch(const std::vector<SyntheticClip>& data);

    std::size_t epochs_done() const { return epochs_done_; }
    const AdamWState& optimizer_state() const { return state_; }
    const TrainConfig& config() const { return config_; }

  private:
    MultiFuserModel& model_;
    TrainConfig config_;
    AdamWState state_;
    std::size_t epochs_done_ = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Runs config.epochs epochs from scratch.
TrainReport train(MultiFuserModel& model, const std::vector<SyntheticClip>& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Argmax predictions (lowest index on ties) and metrics. No graph is built.
EvalResult evaluate(const MultiFuserModel& model, const std::vector<SyntheticClip>& data);

std::size_t argmax(std::span<const double> values);

}  // namespace multifuser
