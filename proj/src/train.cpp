#include "multifuser/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "multifuser/errors.h"
#include "multifuser/ops.h"

namespace multifuser {

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("train.epochs must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("train.lr must be non-negative");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("Adam betas must lie in [0, 1)");
    if (epsilon <= 0.0) throw ConfigError("train.eps must be positive");
}

AdamWState AdamWState::zeros_like(const ParamList& params) {
    AdamWState s;
    for (const NamedTensor& p : params) {
        s.first_moment.emplace_back(p.tensor.numel(), 0.0);
        s.second_moment.emplace_back(p.tensor.numel(), 0.0);
    }
    return s;
}

void adamw_step(const ParamList& params, AdamWState& state, const TrainConfig& config, double grad_scale) {
    if (state.first_moment.size() != params.size()) throw ContractError("adamw_step: optimizer state does not match");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    const double lr = config.learning_rate;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor param = params[p].tensor;
        auto theta = param.mutable_data();
        auto grad = param.grad();
        auto& m = state.first_moment[p];
        auto& v = state.second_moment[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double g = grad.empty() ? 0.0 : grad[i] * grad_scale;
            theta[i] -= lr * config.weight_decay * theta[i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
        param.zero_grad();
    }
}

std::vector<std::size_t> epoch_order(std::size_t samples, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(samples);
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedU};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

namespace {

void check_dataset(const MultiFuserModel& model, const std::vector<SyntheticClip>& data) {
    if (data.empty()) throw ContractError("dataset is empty");
    const ModelConfig& c = model.config();
    const Shape expected{c.modalities, c.frames, c.height, c.width, c.channels};
    for (const SyntheticClip& clip : data) {
        if (clip.pixels.shape() != expected) {
            throw ConfigError("clip shape " + shape_str(clip.pixels.shape()) + " does not match model " +
                              shape_str(expected));
        }
        if (clip.label >= c.num_classes) throw ConfigError("clip label exceeds the model's class count");
    }
}

std::string first_non_finite(const ParamList& params) {
    for (const NamedTensor& p : params) {
        for (double v : p.tensor.data()) {
            if (!std::isfinite(v)) return p.name;
        }
    }
    return "none (inputs or activations)";
}

}  // namespace

Trainer::Trainer(MultiFuserModel& model, TrainConfig config)
    : Trainer(model, config, AdamWState::zeros_like(model.parameters()), 0) {}

Trainer::Trainer(MultiFuserModel& model, TrainConfig config, AdamWState state, std::size_t epochs_done)
    : model_(model), config_(std::move(config)), state_(std::move(state)), epochs_done_(epochs_done) {
    config_.validate();
    if (state_.first_moment.size() != model_.parameters().size()) {
        throw ContractError("Trainer: optimizer state does not match the model");
    }
}

EpochStats Trainer::run_epoch(const std::vector<SyntheticClip>& data) {
    check_dataset(model_, data);
    const ParamList params = model_.parameters();
    for (const NamedTensor& p : params) {
        Tensor t = p.tensor;
        t.zero_grad();
    }
    const std::vector<std::size_t> order = epoch_order(data.size(), config_.seed, epochs_done_);
    std::vector<std::size_t> labels, predictions;
    labels.reserve(data.size());
    predictions.reserve(data.size());
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config_.batch_size);
        // Per-sample graphs; leaf gradients accumulate in sample order.
        for (std::size_t j = begin; j < end; ++j) {
            const SyntheticClip& clip = data[order[j]];
            Tensor logits = model_.forward(clip.pixels);
            Tensor loss = cross_entropy(logits, clip.label);
            if (!std::isfinite(loss.item())) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epochs_done_ + 1) +
                                   "; first non-finite parameter: " + first_non_finite(params));
            }
            loss.backward();
            loss_sum += loss.item();
            labels.push_back(clip.label);
            predictions.push_back(argmax(logits.data()));
        }
        adamw_step(params, state_, config_, 1.0 / static_cast<double>(end - begin));
    }
    ++epochs_done_;
    const EvalResult metrics = compute_metrics(labels, predictions, model_.config().num_classes);
    return {epochs_done_, loss_sum / static_cast<double>(data.size()), metrics.top1, metrics.mean1};
}

TrainReport train(MultiFuserModel& model, const std::vector<SyntheticClip>& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    Trainer trainer(model, config);
    TrainReport report;
    for (std::size_t e = 0; e < config.epochs; ++e) {
        report.epochs.push_back(trainer.run_epoch(data));
        if (on_epoch) on_epoch(report.epochs.back());
    }
    return report;
}

EvalResult evaluate(const MultiFuserModel& model, const std::vector<SyntheticClip>& data) {
    check_dataset(model, data);
    NoGradGuard no_grad;
    std::vector<std::size_t> labels, predictions;
    double loss_sum = 0.0;
    for (const SyntheticClip& clip : data) {
        Tensor logits = model.forward(clip.pixels);
        loss_sum += cross_entropy(logits, clip.label).item();
        labels.push_back(clip.label);
        predictions.push_back(argmax(logits.data()));
    }
    EvalResult r = compute_metrics(labels, predictions, model.config().num_classes);
    r.loss = loss_sum / static_cast<double>(data.size());
    return r;
}

}  // namespace multifuser
