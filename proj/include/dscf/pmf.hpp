#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dscf/data.hpp"
#include "dscf/features.hpp"
#include "dscf/rng.hpp"
#include "dscf/train.hpp"

namespace dscf {

struct PmfConfig {
    std::size_t rank = 10;
    double regularization = 0.05;  // Gaussian prior precision relative to the noise
    double learning_rate = 0.01;
    std::size_t max_epochs = 200;
    std::size_t patience = 5;
    std::uint64_t seed = 1;
};

/// Probabilistic matrix factorization, MAP-trained by SGD:
///   r' = mu + b_u + b_i + p_uᵀ q_i
/// Priors act as L2 shrinkage on p, q, b_u, b_i, applied as a proximal step
/// (x <- x / (1 + lr * reg)) so any regularization weight is stable.
class Pmf {
public:
    Pmf(std::size_t n_users, std::size_t n_items, const PmfConfig& cfg)
        : cfg_(cfg), P_(n_users * cfg.rank), Q_(n_items * cfg.rank), bu_(n_users, 0.0), bi_(n_items, 0.0) {
        Rng rng(derive_seed(cfg.seed, 0x9f));
        for (auto& x : P_) x = 0.1 * rng.normal();
        for (auto& x : Q_) x = 0.1 * rng.normal();
    }

    double raw_predict(UserId u, ItemId i) const {
        double s = mu_ + bu_[u] + bi_[i];
        const auto k = cfg_.rank;
        for (std::size_t f = 0; f < k; ++f) s += P_[u * k + f] * Q_[i * k + f];
        return s;
    }

    double predict(UserId u, ItemId i, int n_levels) const {
        return std::clamp(raw_predict(u, i), 1.0, static_cast<double>(n_levels));
    }

    void set_global_mean(double mu) { mu_ = mu; }

    void sgd_epoch(const RatingDataset& ds, std::span<const std::size_t> order) {
        const auto k = cfg_.rank;
        const double lr = cfg_.learning_rate;
        const double shrink = 1.0 / (1.0 + lr * cfg_.regularization);
        for (const auto idx : order) {
            const auto& t = ds.triple(idx);
            const double err = static_cast<double>(t.rating) - raw_predict(t.user, t.item);
            if (!std::isfinite(err)) throw TrainingError("PMF diverged (non-finite error)");
            double* p = &P_[t.user * k];
            double* q = &Q_[t.item * k];
            for (std::size_t f = 0; f < k; ++f) {
                const double pf = p[f];
                p[f] = (pf + lr * err * q[f]) * shrink;
                q[f] = (q[f] + lr * err * pf) * shrink;
            }
            bu_[t.user] = (bu_[t.user] + lr * err) * shrink;
            bi_[t.item] = (bi_[t.item] + lr * err) * shrink;
        }
    }

    MetricReport evaluate(const RatingDataset& ds, Split split) const {
        std::vector<double> errors;
        errors.reserve(ds.count(split));
        for (const auto i : ds.indices(split)) {
            const auto& t = ds.triple(i);
            errors.push_back(predict(t.user, t.item, ds.n_levels()) - t.rating);
        }
        auto r = metrics_from_errors(errors);
        r.split = split;
        return r;
    }

    /// Item factor columns as similarity features (fallback to NeuMF).
    ItemFeatureTable item_features(std::size_t n_items) const {
        ItemFeatureTable t(n_items, cfg_.rank);
        for (std::size_t i = 0; i < n_items; ++i)
            std::copy_n(Q_.begin() + static_cast<std::ptrdiff_t>(i * cfg_.rank), cfg_.rank, t.row(static_cast<ItemId>(i)).begin());
        t.finalize();
        return t;
    }

    const PmfConfig& config() const noexcept { return cfg_; }

private:
    PmfConfig cfg_;
    double mu_ = 0.0;
    std::vector<double> P_, Q_, bu_, bi_;
};

struct PmfResult {
    Pmf model;
    MetricReport train;
    std::optional<MetricReport> val;
    std::optional<MetricReport> test;
    std::size_t epochs = 0;
};

/// Trains PMF on the train partition with early stopping on validation RMSE
/// (same successive-increase rule as the neural models) and reports metrics
/// of the best epoch.
inline PmfResult train_pmf_baseline(const RatingDataset& ds, const PmfConfig& cfg) {
    if (ds.count(Split::train) == 0) throw DomainError("train_pmf_baseline: empty train partition");
    Pmf model(ds.n_users(), ds.n_items(), cfg);
    model.set_global_mean(mean_train_rating(ds));
    const bool has_val = ds.count(Split::val) > 0;
    std::vector<std::size_t> order(ds.indices(Split::train).begin(), ds.indices(Split::train).end());
    EarlyStopping stopper(cfg.patience);
    Pmf best = model;
    std::size_t epochs = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, 0x70f00 + epoch));
        rng.shuffle(order.begin(), order.end());
        model.sgd_epoch(ds, order);
        epochs = epoch;
        const double monitored = has_val ? model.evaluate(ds, Split::val).rmse : model.evaluate(ds, Split::train).rmse;
        const bool stop = stopper.observe(monitored);
        if (stopper.improved_last()) best = model;
        if (stop && has_val) break;
    }
    PmfResult r{best, best.evaluate(ds, Split::train), std::nullopt, std::nullopt, epochs};
    if (has_val) r.val = best.evaluate(ds, Split::val);
    if (ds.count(Split::test)) r.test = best.evaluate(ds, Split::test);
    return r;
}

/// Grid search over rank and regularization on validation RMSE.
inline PmfResult tune_pmf(const RatingDataset& ds, PmfConfig base, std::span<const std::size_t> ranks,
                          std::span<const double> regs) {
    std::optional<PmfResult> best;
    for (const auto k : ranks)
        for (const auto reg : regs) {
            base.rank = k;
            base.regularization = reg;
            auto r = train_pmf_baseline(ds, base);
            const double score = r.val ? r.val->rmse : r.train.rmse;
            const double best_score = best ? (best->val ? best->val->rmse : best->train.rmse) : std::numeric_limits<double>::infinity();
            if (score < best_score) best = std::move(r);
        }
    if (!best) throw ConfigError("tune_pmf: empty grid");
    return std::move(*best);
}

} // namespace dscf
