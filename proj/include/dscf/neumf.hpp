#pragma once

#include <concepts>
#include <cstdint>
#include <functional>

#include "dscf/data.hpp"
#include "dscf/features.hpp"
#include "dscf/nn/layers.hpp"
#include "dscf/nn/parameter.hpp"
#include "dscf/nn/tape.hpp"
#include "dscf/train.hpp"

namespace dscf {

struct NeuMfConfig {
    std::size_t factors = 8;  // per-branch embedding size; features are 2 * factors wide
    std::size_t hidden_layers = 3;
    std::size_t batch_size = 64;
    double learning_rate = 0.005;
    double dropout = 0.0;
    std::size_t max_epochs = 50;
    std::size_t patience = 5;
    std::uint64_t seed = 1;
};

/// Neural matrix factorization for rating prediction: a GMF branch
/// (p_g * q_g elementwise) and an MLP tower over [p_m, q_m], fused by a
/// linear output layer, trained with squared loss.
template <std::floating_point Real>
class NeuMf {
public:
    using Param = nn::Parameter<Real>;

    NeuMf(const RatingDataset& ds, const NeuMfConfig& cfg) : ds_(&ds), cfg_(cfg) {
        const auto k = cfg.factors;
        if (k == 0) throw ConfigError("NeuMF factors must be positive");
        Pg_ = &store_.add("gmf.P", ds.n_users(), k);
        Qg_ = &store_.add("gmf.Q", ds.n_items(), k);
        Pm_ = &store_.add("mlp.P", ds.n_users(), k);
        Qm_ = &store_.add("mlp.Q", ds.n_items(), k);
        tower_ = nn::Mlp<Real>(store_, "mlp.tower", 2 * k, k, cfg.hidden_layers, k);
        out_W_ = &store_.add("out.W", 1, 2 * k);
        out_b_ = &store_.add("out.b", 1);

        Rng rng(derive_seed(cfg.seed, 0x4e4d));
        for (auto* t : {Pg_, Qg_, Pm_, Qm_}) nn::init_uniform(*t, 0.1, rng);
        tower_.init(rng);
        nn::init_fan_in(*out_W_, rng);
        out_b_->value[0] = static_cast<Real>(mean_train_rating(ds));
    }

    nn::ParameterStore<Real>& parameters() { return store_; }

    nn::Var forward_triple(nn::Tape<Real>& tape, std::size_t i, const nn::ForwardMode& mode) {
        const auto& t = ds_->triple(i);
        return predict(tape, t.user, t.item, mode);
    }

    nn::Var predict(nn::Tape<Real>& tape, UserId u, ItemId v, const nn::ForwardMode& mode) {
        const auto gmf = tape.mul(tape.row(*Pg_, u), tape.row(*Qg_, v));
        const auto mlp = tape.relu(tower_.forward(tape, tape.concat({tape.row(*Pm_, u), tape.row(*Qm_, v)}), mode));
        return tape.affine(*out_W_, *out_b_, tape.concat({gmf, mlp}));
    }

    /// Item features: [q_gmf, q_mlp] per item.
    ItemFeatureTable item_features() const {
        const auto k = cfg_.factors;
        ItemFeatureTable t(ds_->n_items(), 2 * k);
        for (std::size_t i = 0; i < ds_->n_items(); ++i) {
            auto r = t.row(static_cast<ItemId>(i));
            for (std::size_t j = 0; j < k; ++j) {
                r[j] = Qg_->value[i * k + j];
                r[k + j] = Qm_->value[i * k + j];
            }
        }
        t.finalize();
        return t;
    }

    TrainConfig train_config() const {
        TrainConfig c;
        c.d = cfg_.factors;
        c.batch_size = cfg_.batch_size;
        c.learning_rate = cfg_.learning_rate;
        c.dropout = cfg_.dropout;
        c.seed = cfg_.seed;
        c.max_epochs = cfg_.max_epochs;
        c.patience = cfg_.patience;
        return c;
    }

private:
    const RatingDataset* ds_;
    NeuMfConfig cfg_;
    nn::ParameterStore<Real> store_;
    Param* Pg_ = nullptr;
    Param* Qg_ = nullptr;
    Param* Pm_ = nullptr;
    Param* Qm_ = nullptr;
    nn::Mlp<Real> tower_;
    Param* out_W_ = nullptr;
    Param* out_b_ = nullptr;
};

struct NeuMfResult {
    ItemFeatureTable features;
    TrainResult<double> training;
    std::optional<MetricReport> val;
    std::optional<MetricReport> test;
};

/// Trains NeuMF on the train partition (early stopping on validation RMSE)
/// and returns its item embeddings as similarity features, plus its own
/// validation/test metrics as a baseline.
inline NeuMfResult pretrain_neumf(const RatingDataset& ds, const NeuMfConfig& cfg,
                                  const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    if (ds.count(Split::train) == 0) throw DomainError("pretrain_neumf: empty train partition");
    NeuMf<double> net(ds, cfg);
    NeuMfResult r;
    r.training = train<double>(net, ds, net.train_config(), on_epoch);
    r.features = net.item_features();
    if (ds.count(Split::val)) r.val = evaluate<double>(net, ds, Split::val);
    if (ds.count(Split::test)) r.test = evaluate<double>(net, ds, Split::test);
    return r;
}

} // namespace dscf
