#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dscf/features.hpp"
#include "dscf/graph.hpp"
#include "dscf/model.hpp"
#include "dscf/neumf.hpp"
#include "dscf/train.hpp"

namespace dscf {

struct ModelOptions {
    std::size_t hidden_layers = 3;
    bool mask_padding = false;
};

struct VariantOutcome {
    Variant variant = Variant::full;
    std::size_t best_epoch = 0;
    std::size_t epochs = 0;
    MetricReport val;
    MetricReport test;
};

inline void to_json(nlohmann::json& j, const VariantOutcome& o) {
    j = {{"variant", to_string(o.variant)}, {"best_epoch", o.best_epoch}, {"epochs", o.epochs},
         {"val", {{"mae", o.val.mae}, {"rmse", o.val.rmse}}}, {"test", {{"mae", o.test.mae}, {"rmse", o.test.rmse}}}};
}

inline DscfConfig model_config(const RatingDataset& ds, Variant variant, std::size_t d, const ModelOptions& opt = {}) {
    DscfConfig mc;
    mc.n_users = ds.n_users();
    mc.n_items = ds.n_items();
    mc.n_levels = ds.n_levels();
    mc.d = d;
    mc.hidden_layers = opt.hidden_layers;
    mc.variant = variant;
    mc.mask_padding = opt.mask_padding;
    return mc;
}

/// Trains `model` on cached sequences (output bias starts at the mean
/// train rating) and scores the restored best epoch on val and test.
/// `epoch_sequences`, when set, supplies the sequences for each epoch;
/// final scoring always uses `seqs`.
template <std::floating_point Real>
VariantOutcome fit_and_score(DscfModel<Real>& model, const RatingDataset& ds, const SequenceSet& seqs,
                             const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {},
                             const std::function<const SequenceSet&(std::size_t)>& epoch_sequences = {}) {
    model.set_output_bias(static_cast<Real>(mean_train_rating(ds)));
    DscfNet<Real> net(model, ds, seqs);
    if (epoch_sequences) net.set_epoch_hook([&](std::size_t e) { net.set_sequences(epoch_sequences(e)); });
    const auto r = train<Real>(net, ds, cfg, on_epoch);
    net.set_sequences(seqs);
    VariantOutcome out;
    out.variant = model.config().variant;
    out.best_epoch = r.best_epoch;
    out.epochs = r.history.size();
    out.val = evaluate<Real>(net, ds, Split::val);
    out.test = evaluate<Real>(net, ds, Split::test);
    return out;
}

/// One freshly initialized variant (seeded by cfg.seed), trained and scored.
template <std::floating_point Real>
VariantOutcome run_variant(const RatingDataset& ds, const SequenceSet& seqs, Variant variant, const TrainConfig& cfg,
                           const ModelOptions& opt = {}, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    DscfModel<Real> model(model_config(ds, variant, cfg.d, opt), cfg.seed);
    return fit_and_score(model, ds, seqs, cfg, on_epoch);
}

/// Sequences for every pair of the dataset under cfg.walk_length / cfg.num_walks.
inline SequenceSet sequences_for(const RatingDataset& ds, const SocialGraph& g, const ItemFeatureTable& features,
                                 const TrainConfig& cfg) {
    const TrainIndex ti(ds);
    return build_sequence_set(ds, g, ti, features, cfg.walk_length, cfg.num_walks, cfg.seed);
}

/// One ablation pass: every variant on the same sequences and seed.
template <std::floating_point Real>
std::vector<VariantOutcome> run_ablation(const RatingDataset& ds, const SequenceSet& seqs, const TrainConfig& cfg,
                                         std::span<const Variant> variants = kAllVariants,
                                         const ModelOptions& opt = {}) {
    std::vector<VariantOutcome> rows;
    for (const auto v : variants) rows.push_back(run_variant<Real>(ds, seqs, v, cfg, opt));
    return rows;
}

enum class SweepParam { walk_length, num_walks };

inline SweepParam parse_sweep_param(std::string_view s) {
    if (s == "l" || s == "walk_length" || s == "walk-length") return SweepParam::walk_length;
    if (s == "H" || s == "num_walks" || s == "num-walks") return SweepParam::num_walks;
    throw ConfigError("unknown sweep parameter '" + std::string(s) + "' (expected l or H)");
}

struct SweepRow {
    std::size_t value = 0;
    VariantOutcome outcome;
};

/// Trains `variant` once per value of l (or H), rebuilding sequences each time.
template <std::floating_point Real>
std::vector<SweepRow> run_sweep(const RatingDataset& ds, const SocialGraph& g, const ItemFeatureTable& features,
                                TrainConfig cfg, SweepParam param, std::span<const std::size_t> values,
                                Variant variant = Variant::full, const ModelOptions& opt = {}) {
    std::vector<SweepRow> rows;
    for (const auto v : values) {
        if (v == 0) throw ConfigError("sweep values must be positive");
        (param == SweepParam::walk_length ? cfg.walk_length : cfg.num_walks) = v;
        const auto seqs = sequences_for(ds, g, features, cfg);
        rows.push_back({v, run_variant<Real>(ds, seqs, variant, cfg, opt)});
    }
    return rows;
}

/// True when the smallest value lies strictly inside the range.
inline bool minimum_is_interior(std::span<const double> ys) {
    if (ys.size() < 3) return false;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < ys.size(); ++i)
        if (ys[i] < ys[arg]) arg = i;
    return arg != 0 && arg + 1 != ys.size();
}

} // namespace dscf
