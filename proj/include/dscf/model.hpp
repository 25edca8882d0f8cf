#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dscf/errors.hpp"
#include "dscf/features.hpp"
#include "dscf/nn/checkpoint.hpp"
#include "dscf/nn/layers.hpp"
#include "dscf/nn/parameter.hpp"
#include "dscf/nn/tape.hpp"
#include "dscf/rng.hpp"

namespace dscf {

/// Full model and the five ablations.
enum class Variant { full, no_opinion, no_item_opinion, no_attention, averaging, shuffling };

inline constexpr Variant kAllVariants[] = {Variant::full,         Variant::no_opinion, Variant::no_item_opinion,
                                           Variant::no_attention, Variant::averaging,  Variant::shuffling};

inline std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::full: return "full";
    case Variant::no_opinion: return "no_opinion";
    case Variant::no_item_opinion: return "no_item_opinion";
    case Variant::no_attention: return "no_attention";
    case Variant::averaging: return "averaging";
    case Variant::shuffling: return "shuffling";
    }
    return "?";
}

inline Variant parse_variant(std::string_view s) {
    for (const auto v : kAllVariants)
        if (s == to_string(v)) return v;
    throw ConfigError("unknown variant '" + std::string(s) +
                      "' (expected full, no_opinion, no_item_opinion, no_attention, averaging or shuffling)");
}

/// Switches that realize a variant.
struct VariantConfig {
    Variant kind = Variant::full;
    bool use_rating = true;     // r_[k] in the fusion input
    bool use_item = true;       // q_[k] in the fusion input
    bool attention = true;      // learned alpha and beta (else uniform)
    bool recurrent = true;      // Bi-LSTM (else h_[k] = [e_[k], e_[k]] averaged)
    bool shuffle_steps = false;
};

inline VariantConfig make_variant(Variant kind) {
    VariantConfig c;
    c.kind = kind;
    switch (kind) {
    case Variant::full: break;
    case Variant::no_opinion: c.use_rating = false; break;
    case Variant::no_item_opinion:
        c.use_rating = false;
        c.use_item = false;
        break;
    case Variant::no_attention: c.attention = false; break;
    case Variant::averaging: c.recurrent = false; break;
    case Variant::shuffling: c.shuffle_steps = true; break;
    }
    return c;
}

inline VariantConfig make_variant(std::string_view kind) { return make_variant(parse_variant(kind)); }

struct DscfConfig {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    int n_levels = 5;
    std::size_t d = 16;
    std::size_t hidden_layers = 3;
    Variant variant = Variant::full;
    bool mask_padding = false;  // exclude padding steps from alpha
};

/// The DSCF network.
///
/// Tables: P ((N+1) x d), Q ((M+1) x d), R ((I+1) x d); the last user/item
/// row and rating row 0 are the padding rows. Per step, the fusion MLP maps
/// [p, r, q] to e (width d). A forward and a backward LSTM (hidden d) read
/// the e sequence; h_[k] = [fwd_k, bwd_k] has width 2d. Neighbor-level
/// attention pools h into one vector per sequence, sequence-level attention
/// pools those into s. The head is f_uv([q_v, f_us([p_u, s])]).
template <std::floating_point Real>
class DscfModel {
public:
    using Param = nn::Parameter<Real>;
    using Tape = nn::Tape<Real>;
    using Var = nn::Var;
    /// Writes the step order used for sequence `index` of a pair into `perm`
    /// (initially the identity).
    using Permuter = std::function<void(std::uint64_t pair_key, std::size_t index, std::span<std::size_t> perm)>;

    DscfModel(const DscfConfig& cfg, std::uint64_t seed) : cfg_(cfg), variant_(make_variant(cfg.variant)), seed_(seed) {
        const auto d = cfg.d;
        const auto h = 2 * d;
        if (d == 0) throw ConfigError("embedding size must be positive");
        P_ = &store_.add("P", cfg.n_users + 1, d);
        Q_ = &store_.add("Q", cfg.n_items + 1, d);
        R_ = &store_.add("R", static_cast<std::size_t>(cfg.n_levels) + 1, d);
        const std::size_t fusion_in = d * (1 + (variant_.use_rating ? 1 : 0) + (variant_.use_item ? 1 : 0));
        fusion_ = nn::Mlp<Real>(store_, "fusion", fusion_in, d, cfg.hidden_layers, d);
        lstm_fwd_ = nn::Lstm<Real>(store_, "lstm_fwd", d, d);
        lstm_bwd_ = nn::Lstm<Real>(store_, "lstm_bwd", d, d);
        Wa_ = &store_.add("att_step.W", h, h);
        ba_ = &store_.add("att_step.b", h);
        au_ = &store_.add("att_step.context", h);
        Wz_ = &store_.add("att_seq.W", h, h);
        bz_ = &store_.add("att_seq.b", h);
        zu_ = &store_.add("att_seq.context", h);
        f_us_ = nn::Mlp<Real>(store_, "f_us", d + h, d, cfg.hidden_layers, d);
        f_uv_ = nn::Mlp<Real>(store_, "f_uv", 2 * d, d, cfg.hidden_layers, 1);

        Rng rng(derive_seed(seed, 0x1417));
        for (auto* table : {P_, Q_, R_}) nn::init_uniform(*table, 0.1, rng);
        fusion_.init(rng);
        lstm_fwd_.init(rng);
        lstm_bwd_.init(rng);
        for (auto* p : {Wa_, ba_, au_, Wz_, bz_, zu_}) nn::init_uniform(*p, 1.0 / std::sqrt(static_cast<double>(h)), rng);
        f_us_.init(rng);
        f_uv_.init(rng);

        permuter_ = [seed](std::uint64_t key, std::size_t index, std::span<std::size_t> perm) {
            Rng r(derive_seed(derive_seed(seed, 0x5fu ^ key), index));
            r.shuffle(perm.begin(), perm.end());
        };
    }

    const DscfConfig& config() const noexcept { return cfg_; }
    const VariantConfig& variant() const noexcept { return variant_; }
    nn::ParameterStore<Real>& parameters() noexcept { return store_; }
    const nn::ParameterStore<Real>& parameters() const noexcept { return store_; }

    /// Replaces the step permutation used by the shuffling variant.
    void set_permuter(Permuter p) { permuter_ = std::move(p); }

    /// Starts predictions at `value` (typically the mean train rating).
    void set_output_bias(Real value) { f_uv_.output_bias().value[0] = value; }

    /// e_[k] = g([p, r, q]) with the variant's inputs.
    Var fuse_interaction(Tape& tape, const SequenceStep& step, const nn::ForwardMode& mode) {
        if (step.user > cfg_.n_users || step.item > cfg_.n_items || step.rating > static_cast<Level>(cfg_.n_levels))
            throw DomainError("step (" + std::to_string(step.user) + ", " + std::to_string(step.item) + ", " +
                              std::to_string(step.rating) + ") outside embedding tables");
        Var parts[3];
        std::size_t n = 0;
        parts[n++] = tape.row(*P_, step.user);
        if (variant_.use_rating) parts[n++] = tape.row(*R_, step.rating);
        if (variant_.use_item) parts[n++] = tape.row(*Q_, step.item);
        const Var x = n == 1 ? parts[0] : tape.concat(std::span<const Var>(parts, n));
        return fusion_.forward(tape, x, mode);
    }

    struct Encoded {
        Var rep;                  // s_(i), width 2d
        Var weights;              // alpha over the attended steps
        std::vector<Var> hidden;  // h_[k]
    };

    /// Bi-LSTM over the fused embeddings, then neighbor-level attention:
    ///   a_k = tanh(W_a h_k + b_a),  alpha = softmax_k(a_kᵀ a_u),  s = sum_k alpha_k h_k
    /// `padding` (optional, one flag per step) is honored when mask_padding is set.
    Encoded encode_sequence(Tape& tape, std::span<const Var> e, std::span<const std::uint8_t> padding = {}) {
        if (e.empty()) throw DomainError("encode_sequence: empty sequence");
        Encoded out;
        if (variant_.recurrent) {
            const auto fwd = lstm_fwd_.run(tape, e, false);
            const auto bwd = lstm_bwd_.run(tape, e, true);
            out.hidden.reserve(e.size());
            for (std::size_t k = 0; k < e.size(); ++k) out.hidden.push_back(tape.concat({fwd[k], bwd[k]}));
        } else {
            for (const auto x : e) out.hidden.push_back(tape.concat({x, x}));
        }

        std::vector<Var> attended;
        if (cfg_.mask_padding && !padding.empty()) {
            for (std::size_t k = 0; k < out.hidden.size(); ++k)
                if (!padding[k]) attended.push_back(out.hidden[k]);
        }
        if (attended.empty()) attended = out.hidden;

        if (!variant_.attention || !variant_.recurrent) {
            out.rep = tape.mean(attended);
            return out;
        }
        out.weights = attention_weights(tape, attended, *Wa_, *ba_, *au_);
        out.rep = tape.weighted_sum(out.weights, attended);
        return out;
    }

    struct Aggregated {
        Var rep;      // s^{u,v}, width 2d
        Var weights;  // beta
    };

    /// Sequence-level attention:
    ///   z_i = tanh(W_z s_i + b_z),  beta = softmax_i(z_iᵀ z_u),  s = sum_i beta_i s_i
    Aggregated aggregate_sequences(Tape& tape, std::span<const Var> reps) {
        if (reps.empty()) throw DomainError("aggregate_sequences: no sequence representations");
        Aggregated out;
        if (!variant_.attention) {
            out.rep = tape.mean(reps);
            return out;
        }
        out.weights = attention_weights(tape, reps, *Wz_, *bz_, *zu_);
        out.rep = tape.weighted_sum(out.weights, reps);
        return out;
    }

    /// r' = f_uv([q_v, f_us([p_u, s])]); raw, unclamped.
    Var predict(Tape& tape, UserId u, ItemId v, Var s, const nn::ForwardMode& mode) {
        if (u >= cfg_.n_users || v >= cfg_.n_items)
            throw DomainError("pair (" + std::to_string(u) + ", " + std::to_string(v) + ") outside id space");
        const Var user_social = f_us_.forward(tape, tape.concat({tape.row(*P_, u), s}), mode);
        return f_uv_.forward(tape, tape.concat({tape.row(*Q_, v), user_social}), mode);
    }

    /// Whole forward pass for (u, v) over its H item-aware sequences.
    Var forward(Tape& tape, UserId u, ItemId v, std::span<const std::span<const SequenceStep>> sequences,
                const nn::ForwardMode& mode) {
        if (sequences.empty()) throw DomainError("forward: no sequences for pair");
        const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | v;
        std::vector<Var> reps;
        reps.reserve(sequences.size());
        std::vector<Var> e;
        std::vector<std::size_t> order;
        std::vector<std::uint8_t> padding;
        for (std::size_t i = 0; i < sequences.size(); ++i) {
            const auto steps = sequences[i];
            order.resize(steps.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            if (variant_.shuffle_steps) permuter_(key, i, order);
            e.clear();
            padding.assign(steps.size(), 0);
            for (std::size_t k = 0; k < steps.size(); ++k) {
                const auto& st = steps[order[k]];
                e.push_back(fuse_interaction(tape, st, mode));
                padding[k] = st.rating == 0;
            }
            reps.push_back(encode_sequence(tape, e, padding).rep);
        }
        return predict(tape, u, v, aggregate_sequences(tape, reps).rep, mode);
    }

    nn::Metadata checkpoint_metadata() const {
        return {{"model", "dscf"},
                {"variant", std::string(to_string(cfg_.variant))},
                {"d", std::to_string(cfg_.d)},
                {"n_users", std::to_string(cfg_.n_users)},
                {"n_items", std::to_string(cfg_.n_items)},
                {"n_levels", std::to_string(cfg_.n_levels)},
                {"hidden_layers", std::to_string(cfg_.hidden_layers)},
                {"mask_padding", cfg_.mask_padding ? "1" : "0"},
                {"seed", std::to_string(seed_)}};
    }

    /// Rebuilds the configuration recorded by checkpoint_metadata().
    static DscfConfig config_from_metadata(const nn::Metadata& m) {
        auto get = [&](const char* k) {
            auto it = m.find(k);
            if (it == m.end()) throw FormatError(std::string("checkpoint metadata lacks '") + k + "'");
            return it->second;
        };
        if (get("model") != "dscf") throw FormatError("checkpoint is not a DSCF model");
        DscfConfig c;
        c.variant = parse_variant(get("variant"));
        c.d = std::stoul(get("d"));
        c.n_users = std::stoul(get("n_users"));
        c.n_items = std::stoul(get("n_items"));
        c.n_levels = std::stoi(get("n_levels"));
        c.hidden_layers = std::stoul(get("hidden_layers"));
        c.mask_padding = get("mask_padding") == "1";
        return c;
    }

    // Named access for tests and tooling.
    Param& user_table() { return *P_; }
    Param& item_table() { return *Q_; }
    Param& rating_table() { return *R_; }
    nn::Mlp<Real>& fusion() { return fusion_; }
    nn::Lstm<Real>& lstm_forward() { return lstm_fwd_; }
    nn::Lstm<Real>& lstm_backward() { return lstm_bwd_; }
    nn::Mlp<Real>& user_social_mlp() { return f_us_; }
    nn::Mlp<Real>& rating_mlp() { return f_uv_; }

private:
    static Var attention_weights(Tape& tape, std::span<const Var> xs, Param& W, Param& b, Param& context) {
        const Var ctx = tape.param(context);
        std::vector<Var> scores;
        scores.reserve(xs.size());
        for (const auto x : xs) scores.push_back(tape.dot(tape.tanh(tape.affine(W, b, x)), ctx));
        return tape.softmax(tape.concat(scores));
    }

    DscfConfig cfg_;
    VariantConfig variant_;
    std::uint64_t seed_;
    nn::ParameterStore<Real> store_;
    Param* P_ = nullptr;
    Param* Q_ = nullptr;
    Param* R_ = nullptr;
    nn::Mlp<Real> fusion_;
    nn::Lstm<Real> lstm_fwd_;
    nn::Lstm<Real> lstm_bwd_;
    Param* Wa_ = nullptr;
    Param* ba_ = nullptr;
    Param* au_ = nullptr;
    Param* Wz_ = nullptr;
    Param* bz_ = nullptr;
    Param* zu_ = nullptr;
    nn::Mlp<Real> f_us_;
    nn::Mlp<Real> f_uv_;
    Permuter permuter_;
};

} // namespace dscf
