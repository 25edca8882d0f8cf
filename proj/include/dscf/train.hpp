#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dscf/data.hpp"
#include "dscf/errors.hpp"
#include "dscf/features.hpp"
#include "dscf/model.hpp"
#include "dscf/nn/adam.hpp"
#include "dscf/nn/layers.hpp"
#include "dscf/nn/tape.hpp"
#include "dscf/rng.hpp"

namespace dscf {

struct TrainConfig {
    std::size_t d = 16;
    std::size_t batch_size = 64;
    double learning_rate = 0.005;
    double dropout = 0.5;
    std::size_t walk_length = 4;  // l
    std::size_t num_walks = 4;    // H
    std::uint64_t seed = 1;
    std::size_t max_epochs = 100;
    std::size_t patience = 5;

    void validate() const {
        if (d == 0 || batch_size == 0 || walk_length == 0 || num_walks == 0 || max_epochs == 0)
            throw ConfigError("embedding size, batch size, l, H and max_epochs must be positive");
        if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
        if (patience < 1) throw ConfigError("patience must be at least 1");
    }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"d", c.d},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"dropout", c.dropout},
         {"walk_length", c.walk_length},
         {"num_walks", c.num_walks},
         {"seed", c.seed},
         {"max_epochs", c.max_epochs},
         {"patience", c.patience}};
}

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    Split split = Split::test;
    std::size_t epoch = 0;
    std::size_t count = 0;
    std::optional<TrainConfig> config;
};

/// Record fields: epoch, split, mae, rmse, count (+ config when present).
inline void to_json(nlohmann::json& j, const MetricReport& r) {
    j = {{"epoch", r.epoch}, {"split", std::string(to_string(r.split))}, {"mae", r.mae}, {"rmse", r.rmse},
         {"count", r.count}};
    if (r.config) j["config"] = *r.config;
}

/// MAE and RMSE of an error vector (prediction minus target).
inline MetricReport metrics_from_errors(std::span<const double> errors) {
    if (errors.empty()) throw DomainError("metrics over an empty split");
    double abs_sum = 0, sq_sum = 0;
    for (const auto e : errors) {
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    MetricReport r;
    r.count = errors.size();
    r.mae = abs_sum / static_cast<double>(errors.size());
    r.rmse = std::sqrt(sq_sum / static_cast<double>(errors.size()));
    return r;
}

/// (1 / 2|O|) * sum (prediction - target)^2
inline double loss_mse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size())
        throw DimensionError("loss_mse: [" + std::to_string(predictions.size()) + "] predictions vs [" +
                             std::to_string(targets.size()) + "] targets");
    if (predictions.empty()) throw DomainError("loss_mse: empty input");
    double s = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - targets[i];
        s += e * e;
    }
    return s / (2.0 * static_cast<double>(predictions.size()));
}

/// Stops once the monitored value has increased over the previous epoch
/// for `patience` successive epochs. Tracks the best (lowest) epoch.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {
        if (patience == 0) throw ConfigError("patience must be at least 1");
    }

    /// Feeds one epoch's value; returns true when training should stop.
    bool observe(double value) {
        ++epoch_;
        if (previous_ && value > *previous_)
            ++increases_;
        else
            increases_ = 0;
        previous_ = value;
        if (value < best_) {
            best_ = value;
            best_epoch_ = epoch_;
        }
        return increases_ >= patience_;
    }

    bool improved_last() const noexcept { return best_epoch_ == epoch_; }
    double best() const noexcept { return best_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }
    std::size_t successive_increases() const noexcept { return increases_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t increases_ = 0;
    std::optional<double> previous_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t best_epoch_ = 0;
};

/// A network the trainer can drive: a parameter store plus a forward pass
/// that records the raw prediction for dataset triple `i` on a tape.
template <class Net, class Real>
concept TrainableNet = requires(Net& net, nn::Tape<Real>& tape, std::size_t i, const nn::ForwardMode& mode) {
    { net.parameters() } -> std::same_as<nn::ParameterStore<Real>&>;
    { net.forward_triple(tape, i, mode) } -> std::same_as<nn::Var>;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // objective over the epoch, dropout active
    std::optional<MetricReport> val;
};

inline void to_json(nlohmann::json& j, const EpochRecord& r) {
    j = {{"epoch", r.epoch}, {"split", "train"}, {"train_loss", r.train_loss}};
    if (r.val) {
        j["val_mae"] = r.val->mae;
        j["val_rmse"] = r.val->rmse;
    }
}

template <std::floating_point Real>
struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_rmse = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
    typename nn::ParameterStore<Real>::Snapshot best;
};

/// Predictions for every triple of a split in evaluation mode, clamped to [1, I].
template <std::floating_point Real, TrainableNet<Real> Net>
std::vector<double> predict_split(Net& net, const RatingDataset& ds, Split split) {
    nn::Tape<Real> tape;
    const nn::ForwardMode eval{};
    std::vector<double> out;
    out.reserve(ds.count(split));
    for (const auto i : ds.indices(split)) {
        tape.clear();
        const double p = static_cast<double>(tape.scalar(net.forward_triple(tape, i, eval)));
        out.push_back(std::clamp(p, 1.0, static_cast<double>(ds.n_levels())));
    }
    return out;
}

/// MAE / RMSE over a split with clamped predictions. Side-effect free.
template <std::floating_point Real, TrainableNet<Real> Net>
MetricReport evaluate(Net& net, const RatingDataset& ds, Split split) {
    if (ds.count(split) == 0) throw DomainError("evaluate: split '" + std::string(to_string(split)) + "' is empty");
    const auto preds = predict_split<Real>(net, ds, split);
    std::vector<double> errors(preds.size());
    const auto& idx = ds.indices(split);
    for (std::size_t k = 0; k < preds.size(); ++k) errors[k] = preds[k] - ds.triple(idx[k]).rating;
    auto r = metrics_from_errors(errors);
    r.split = split;
    return r;
}

/// Minibatch Adam on the halved squared error over the train partition.
///
/// Each epoch visits the train triples in a seed-determined order. After
/// every epoch the validation RMSE is measured; the parameters of the best
/// epoch are restored before returning. Training stops early when the
/// validation RMSE rises for `patience` successive epochs. Without a
/// validation partition it runs `max_epochs`.
template <std::floating_point Real, TrainableNet<Real> Net>
TrainResult<Real> train(Net& net, const RatingDataset& ds, const TrainConfig& cfg,
                        const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    cfg.validate();
    const auto& train_idx = ds.indices(Split::train);
    if (train_idx.empty()) throw DomainError("train: empty train partition");
    auto& params = net.parameters();
    params.zero_grad();
    nn::Adam<Real> adam(nn::AdamConfig{.learning_rate = cfg.learning_rate});
    EarlyStopping stopper(cfg.patience);
    nn::Tape<Real> tape;
    TrainResult<Real> result;
    const bool has_val = ds.count(Split::val) > 0;

    std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if constexpr (requires { net.on_epoch_begin(epoch); }) net.on_epoch_begin(epoch);
        Rng order_rng(derive_seed(cfg.seed, 0xe70c00 + epoch));
        Rng dropout_rng(derive_seed(cfg.seed, 0xd70900 + epoch));
        order_rng.shuffle(order.begin(), order.end());
        const nn::ForwardMode mode{.training = true, .dropout = cfg.dropout, .rng = &dropout_rng};

        double sq_sum = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const auto end = std::min(order.size(), start + cfg.batch_size);
            const Real inv_batch = Real(1) / static_cast<Real>(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const auto i = order[k];
                tape.clear();
                const auto pred = net.forward_triple(tape, i, mode);
                const Real err = tape.scalar(pred) - static_cast<Real>(ds.triple(i).rating);
                if (!std::isfinite(err))
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " (triple " +
                                        std::to_string(i) + ")");
                sq_sum += static_cast<double>(err) * err;
                // d/dpred of (1 / 2B) * err^2
                tape.backward(pred, err * inv_batch);
            }
            adam.step(params);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = sq_sum / (2.0 * static_cast<double>(order.size()));
        if (has_val) {
            rec.val = evaluate<Real>(net, ds, Split::val);
            rec.val->epoch = epoch;
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        const double monitored = has_val ? rec.val->rmse : std::sqrt(2.0 * rec.train_loss);
        const bool stop = stopper.observe(monitored);
        if (stopper.improved_last() || result.best.empty()) {
            result.best = params.snapshot();
            result.best_epoch = epoch;
            result.best_val_rmse = monitored;
        }
        if (stop && has_val) {
            result.stopped_early = true;
            break;
        }
    }
    params.restore(result.best);
    return result;
}

/// Binds a DSCF model to its dataset and sequence cache.
template <std::floating_point Real>
class DscfNet {
public:
    DscfNet(DscfModel<Real>& model, const RatingDataset& ds, const SequenceSet& seqs)
        : model_(&model), ds_(&ds), seqs_(&seqs) {}

    nn::ParameterStore<Real>& parameters() { return model_->parameters(); }
    DscfModel<Real>& model() { return *model_; }

    void set_sequences(const SequenceSet& seqs) { seqs_ = &seqs; }

    /// Called at the start of every epoch with the epoch number; used to
    /// regenerate walks per epoch instead of reusing the cached ones.
    void set_epoch_hook(std::function<void(std::size_t)> hook) { epoch_hook_ = std::move(hook); }
    void on_epoch_begin(std::size_t epoch) {
        if (epoch_hook_) epoch_hook_(epoch);
    }

    nn::Var forward_triple(nn::Tape<Real>& tape, std::size_t i, const nn::ForwardMode& mode) {
        const auto& t = ds_->triple(i);
        if (!seqs_->has(i))
            throw DomainError("no item-aware sequences for pair (user " + std::to_string(t.user) + ", item " +
                              std::to_string(t.item) + ")");
        views_.clear();
        for (std::size_t h = 0; h < seqs_->count(); ++h) views_.push_back(seqs_->steps(i, h));
        return model_->forward(tape, t.user, t.item, views_, mode);
    }

private:
    DscfModel<Real>* model_;
    const RatingDataset* ds_;
    const SequenceSet* seqs_;
    std::vector<std::span<const SequenceStep>> views_;
    std::function<void(std::size_t)> epoch_hook_;
};

/// Mean train rating; used to start output biases.
inline double mean_train_rating(const RatingDataset& ds) {
    const auto& idx = ds.indices(Split::train);
    if (idx.empty()) return 0.0;
    double s = 0;
    for (const auto i : idx) s += ds.triple(i).rating;
    return s / static_cast<double>(idx.size());
}

} // namespace dscf
