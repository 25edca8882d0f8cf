#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dscf/model.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace dscf;
using nn::Tape;
using nn::Var;

namespace {

DscfConfig tiny(Variant v = Variant::full, std::size_t d = 4) {
    DscfConfig c;
    c.n_users = 6;
    c.n_items = 8;
    c.n_levels = 5;
    c.d = d;
    c.variant = v;
    return c;
}

std::vector<std::vector<SequenceStep>> random_sequences(std::size_t H, std::size_t l, Rng& rng, bool with_padding) {
    std::vector<std::vector<SequenceStep>> out(H);
    for (auto& s : out)
        for (std::size_t k = 0; k < l; ++k) {
            if (with_padding && k + 1 == l && rng.uniform01() < 0.5)
                s.push_back({6, 8, 0});
            else
                s.push_back({static_cast<UserId>(rng.uniform_index(6)), static_cast<ItemId>(rng.uniform_index(8)),
                             static_cast<Level>(1 + rng.uniform_index(5))});
        }
    return out;
}

std::vector<std::span<const SequenceStep>> views(const std::vector<std::vector<SequenceStep>>& s) {
    return {s.begin(), s.end()};
}

std::vector<double> values(const Tape<double>& t, Var v) {
    const auto s = t.value(v);
    return {s.begin(), s.end()};
}

void fill(nn::Parameter<double>& p, Rng& rng, double scale) {
    for (auto& v : p.value) v = rng.uniform(-scale, scale);
}

} // namespace

TEST(Variant, Parse) {
    EXPECT_EQ(parse_variant("no_item_opinion"), Variant::no_item_opinion);
    EXPECT_THROW(parse_variant("bogus"), ConfigError);
    EXPECT_FALSE(make_variant(Variant::no_opinion).use_rating);
    EXPECT_TRUE(make_variant(Variant::no_opinion).use_item);
    EXPECT_TRUE(make_variant(Variant::shuffling).shuffle_steps);
}

TEST(Model, FusionInputWidthPerVariant) {
    EXPECT_EQ(DscfModel<double>(tiny(Variant::full), 1).fusion().input_size(), 12u);
    EXPECT_EQ(DscfModel<double>(tiny(Variant::no_opinion), 1).fusion().input_size(), 8u);
    EXPECT_EQ(DscfModel<double>(tiny(Variant::no_item_opinion), 1).fusion().input_size(), 4u);
}

TEST(Model, TableShapes) {
    DscfModel<double> m(tiny(), 1);
    EXPECT_EQ(m.user_table().rows, 7u);
    EXPECT_EQ(m.item_table().rows, 9u);
    EXPECT_EQ(m.rating_table().rows, 6u);
    for (const auto& p : m.parameters())
        if (p->name == "P" || p->name == "Q" || p->name == "R")
            for (const auto v : p->value) EXPECT_LE(std::abs(v), 0.1);
}

TEST(Model, FusionShapeAndRatingSensitivity) {
    DscfModel<double> m(tiny(), 3);
    Tape<double> t;
    const auto a = m.fuse_interaction(t, {1, 2, 1}, {});
    const auto b = m.fuse_interaction(t, {1, 2, 5}, {});
    EXPECT_EQ(t.dim(a), 4u);
    double diff = 0;
    for (std::size_t i = 0; i < 4; ++i) diff = std::max(diff, std::abs(t.value(a)[i] - t.value(b)[i]));
    EXPECT_GT(diff, 1e-8);
    EXPECT_THROW(m.fuse_interaction(t, {7, 0, 1}, {}), DomainError);
    EXPECT_NO_THROW(m.fuse_interaction(t, {6, 8, 0}, {}));
}

TEST(Model, FusionZeroWeightsGiveZero) {
    DscfModel<double> m(tiny(), 3);
    for (auto& p : m.parameters())
        if (p->name.rfind("fusion.", 0) == 0) std::fill(p->value.begin(), p->value.end(), 0.0);
    Tape<double> t;
    for (const auto v : t.value(m.fuse_interaction(t, {1, 2, 3}, {}))) EXPECT_EQ(v, 0.0);
}

TEST(Model, EncoderMatchesScalarRecurrence) {
    DscfModel<double> m(tiny(Variant::full, 2), 5);
    Rng rng(77);
    auto& store = m.parameters();
    for (const char* name : {"lstm_fwd.W", "lstm_fwd.b", "lstm_bwd.W", "lstm_bwd.b", "att_step.W", "att_step.b",
                             "att_step.context"})
        fill(store.get(name), rng, 0.9);
    const std::vector<std::vector<double>> xs{{0.3, -0.8}, {1.1, 0.25}, {-0.6, 0.4}};

    Tape<double> t;
    std::vector<Var> e;
    for (const auto& x : xs) e.push_back(t.input(x));
    const auto enc = m.encode_sequence(t, e);

    const auto fwd = dscf::testing::scalar_lstm(store.get("lstm_fwd.W").value, store.get("lstm_fwd.b").value, xs, 2, false);
    const auto bwd = dscf::testing::scalar_lstm(store.get("lstm_bwd.W").value, store.get("lstm_bwd.b").value, xs, 2, true);
    std::vector<std::vector<double>> hs;
    for (std::size_t k = 0; k < 3; ++k) hs.push_back({fwd[k][0], fwd[k][1], bwd[k][0], bwd[k][1]});
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(t.value(enc.hidden[k])[c], hs[k][c], 1e-10);

    const auto [alpha, pooled] = dscf::testing::scalar_attention(hs, store.get("att_step.W").value, store.get("att_step.b").value,
                                                  store.get("att_step.context").value);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(t.value(enc.weights)[k], alpha[k], 1e-10);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(t.value(enc.rep)[c], pooled[c], 1e-10);
}

TEST(Model, SequenceAttentionMatchesHandSoftmax) {
    DscfModel<double> m(tiny(Variant::full, 2), 5);
    auto& store = m.parameters();
    store.get("att_seq.W").value = {0.5, -0.2, 0.1, 0.3, -0.4, 0.2, 0.6, -0.1, 0.05, 0.7, -0.3, 0.2, 0.1, 0.1, 0.4, -0.6};
    store.get("att_seq.b").value = {0.1, -0.1, 0.05, 0.0};
    store.get("att_seq.context").value = {1.0, -0.5, 0.25, 0.8};
    const std::vector<std::vector<double>> reps{{0.2, 0.4, -0.1, 0.9}, {-0.7, 0.3, 0.5, 0.1}, {0.0, -0.2, 0.8, -0.4}};
    Tape<double> t;
    std::vector<Var> rv;
    for (const auto& r : reps) rv.push_back(t.input(r));
    const auto agg = m.aggregate_sequences(t, rv);
    const auto [beta, pooled] = dscf::testing::scalar_attention(reps, store.get("att_seq.W").value, store.get("att_seq.b").value,
                                                 store.get("att_seq.context").value);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(t.value(agg.weights)[i], beta[i], 1e-10);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(t.value(agg.rep)[c], pooled[c], 1e-10);
}

TEST(Model, SingletonsPassThrough) {
    DscfModel<double> m(tiny(), 2);
    Tape<double> t;
    const Var e[] = {t.input({0.1, 0.2, -0.3, 0.4})};
    const auto enc = m.encode_sequence(t, e);
    EXPECT_DOUBLE_EQ(t.value(enc.weights)[0], 1.0);
    EXPECT_EQ(values(t, enc.rep), values(t, enc.hidden[0]));

    const Var one[] = {enc.rep};
    EXPECT_EQ(values(t, m.aggregate_sequences(t, one).rep), values(t, enc.rep));
    const Var same[] = {enc.rep, enc.rep, enc.rep};
    const auto agg = m.aggregate_sequences(t, same);
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(t.value(agg.rep)[c], t.value(enc.rep)[c], 1e-15);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(t.value(agg.weights)[i], 1.0 / 3.0, 1e-15);
}

TEST(Model, AttentionWeightsAreDistributions) {
    DscfModel<double> m(tiny(), 8);
    Rng rng(8);
    Tape<double> t;
    std::vector<Var> e;
    for (int k = 0; k < 5; ++k) e.push_back(t.input({rng.normal(), rng.normal(), rng.normal(), rng.normal()}));
    const auto enc = m.encode_sequence(t, e);
    double s = 0;
    for (const auto w : t.value(enc.weights)) {
        EXPECT_GE(w, 0.0);
        s += w;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
    EXPECT_THROW(m.encode_sequence(t, {}), DomainError);
}

TEST(Model, ReversalSwapsDirections) {
    DscfModel<double> a(tiny(Variant::full, 2), 5);
    DscfModel<double> b(tiny(Variant::full, 2), 6);
    auto& sa = a.parameters();
    auto& sb = b.parameters();
    sb.get("lstm_fwd.W").value = sa.get("lstm_bwd.W").value;
    sb.get("lstm_fwd.b").value = sa.get("lstm_bwd.b").value;
    sb.get("lstm_bwd.W").value = sa.get("lstm_fwd.W").value;
    sb.get("lstm_bwd.b").value = sa.get("lstm_fwd.b").value;
    const std::vector<std::vector<double>> xs{{0.3, -0.8}, {1.1, 0.25}, {-0.6, 0.4}};
    Tape<double> t;
    std::vector<Var> e, er;
    for (const auto& x : xs) e.push_back(t.input(x));
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) er.push_back(t.input(*it));
    const auto ha = a.encode_sequence(t, e).hidden;
    const auto hb = b.encode_sequence(t, er).hidden;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto x = t.value(ha[2 - k]);
        const auto y = t.value(hb[k]);
        for (std::size_t c = 0; c < 2; ++c) {
            EXPECT_NEAR(y[c], x[2 + c], 1e-14);
            EXPECT_NEAR(y[2 + c], x[c], 1e-14);
        }
    }
}

TEST(Model, NoAttentionEqualsFullOnIdenticalRepresentations) {
    DscfModel<double> full(tiny(Variant::full), 4);
    DscfModel<double> flat(tiny(Variant::no_attention), 4);
    Tape<double> t;
    const auto r = t.input({0.1, -0.2, 0.3, 0.5, 0.7, -0.1, 0.0, 0.2});
    const Var reps[] = {r, r, r};
    const auto x = values(t, full.aggregate_sequences(t, reps).rep);
    const auto y = values(t, flat.aggregate_sequences(t, reps).rep);
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(x[c], y[c], 1e-15);
}

TEST(Model, AveragingDuplicatesFusedEmbedding) {
    DscfModel<double> m(tiny(Variant::averaging), 4);
    Tape<double> t;
    const Var e[] = {t.input({0.1, 0.2, 0.3, 0.4}), t.input({-0.5, 0.5, 0.1, 0.0})};
    const auto rep = values(t, m.encode_sequence(t, e).rep);
    const std::vector<double> expect{-0.2, 0.35, 0.2, 0.2, -0.2, 0.35, 0.2, 0.2};
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(rep[c], expect[c], 1e-15);
}

TEST(Model, ShufflingWithIdentityIsBitIdentical) {
    DscfModel<double> full(tiny(Variant::full), 9);
    DscfModel<double> shuf(tiny(Variant::shuffling), 9);
    shuf.set_permuter([](std::uint64_t, std::size_t, std::span<std::size_t>) {});
    Rng rng(1);
    const auto seqs = random_sequences(3, 4, rng, true);
    Tape<double> t1, t2;
    EXPECT_EQ(t1.scalar(full.forward(t1, 2, 3, views(seqs), {})), t2.scalar(shuf.forward(t2, 2, 3, views(seqs), {})));
}

TEST(Model, ShufflingSingleStepEqualsFull) {
    DscfModel<double> full(tiny(Variant::full), 9);
    DscfModel<double> shuf(tiny(Variant::shuffling), 9);
    Rng rng(2);
    const auto seqs = random_sequences(2, 1, rng, false);
    Tape<double> t1, t2;
    EXPECT_EQ(t1.scalar(full.forward(t1, 0, 1, views(seqs), {})), t2.scalar(shuf.forward(t2, 0, 1, views(seqs), {})));
}

TEST(Model, ShufflingIsFixedPerSequence) {
    DscfModel<double> shuf(tiny(Variant::shuffling), 9);
    Rng rng(3);
    const auto seqs = random_sequences(2, 5, rng, false);
    Tape<double> t1, t2;
    EXPECT_EQ(t1.scalar(shuf.forward(t1, 0, 1, views(seqs), {})), t2.scalar(shuf.forward(t2, 0, 1, views(seqs), {})));
}

TEST(Model, ZeroOutputWeightsGiveBias) {
    DscfModel<double> m(tiny(), 2);
    auto& W = m.rating_mlp().output_weight();
    std::fill(W.value.begin(), W.value.end(), 0.0);
    m.set_output_bias(3.25);
    Rng rng(5);
    for (int k = 0; k < 5; ++k) {
        const auto seqs = random_sequences(2, 3, rng, true);
        Tape<double> t;
        EXPECT_EQ(t.scalar(m.forward(t, static_cast<UserId>(k), 1, views(seqs), {})), 3.25);
    }
}

TEST(Model, PaddingStaysFinite) {
    DscfModel<double> m(tiny(), 2);
    const std::vector<std::vector<SequenceStep>> pad(2, std::vector<SequenceStep>(3, SequenceStep{6, 8, 0}));
    Tape<double> t;
    const auto y = m.forward(t, 0, 0, views(pad), {});
    EXPECT_TRUE(std::isfinite(t.scalar(y)));
    t.backward(y);
    for (const auto& p : m.parameters())
        for (const auto g : p->grad) ASSERT_TRUE(std::isfinite(g)) << p->name;
}

TEST(Model, MaskedPaddingIgnoresPaddedSteps) {
    auto cfg = tiny();
    cfg.mask_padding = true;
    DscfModel<double> m(cfg, 2);
    Tape<double> t;
    const Var e[] = {t.input({0.1, 0.2, 0.3, 0.4}), t.input({0.0, 0.0, 0.0, 0.0})};
    const std::uint8_t flags[] = {0, 1};
    const auto enc = m.encode_sequence(t, e, flags);
    EXPECT_EQ(t.dim(enc.weights), 1u);
    EXPECT_EQ(values(t, enc.rep), values(t, enc.hidden[0]));
    const std::uint8_t all[] = {1, 1};
    EXPECT_EQ(t.dim(m.encode_sequence(t, e, all).weights), 2u);
}

TEST(Model, PredictRejectsOutOfRange) {
    DscfModel<double> m(tiny(), 2);
    Rng rng(5);
    const auto seqs = random_sequences(1, 2, rng, false);
    Tape<double> t;
    EXPECT_THROW(m.forward(t, 6, 0, views(seqs), {}), DomainError);
    EXPECT_THROW(m.forward(t, 0, 0, {}, {}), DomainError);
}

TEST(Model, MetadataRoundTrip) {
    auto cfg = tiny(Variant::no_opinion);
    cfg.mask_padding = true;
    DscfModel<double> m(cfg, 2);
    const auto back = DscfModel<double>::config_from_metadata(m.checkpoint_metadata());
    EXPECT_EQ(back.variant, Variant::no_opinion);
    EXPECT_EQ(back.d, 4u);
    EXPECT_EQ(back.n_items, 8u);
    EXPECT_TRUE(back.mask_padding);
    std::stringstream ss;
    nn::save_checkpoint(ss, m.parameters(), m.checkpoint_metadata());
    DscfModel<double> m2(back, 99);
    nn::load_checkpoint(ss, m2.parameters());
    EXPECT_EQ(m2.user_table().value, m.user_table().value);
}

class VariantGradients : public ::testing::TestWithParam<Variant> {};

TEST_P(VariantGradients, MatchFiniteDifferences) {
    DscfModel<double> m(tiny(GetParam()), 11);
    Rng rng(6);
    dscf::testing::spread_parameters(m.parameters(), rng);
    const auto seqs = random_sequences(2, 3, rng, true);
    const auto rep = dscf::testing::check_gradients(m.parameters(), [&](Tape<double>& t) {
        const auto y = m.forward(t, 2, 5, views(seqs), {});
        const auto err = t.sub(y, t.input({4.0}));
        return t.scale(t.mul(err, err), 0.5);
    });
    for (const auto& [name, err] : rep.rel_error) EXPECT_LT(err, 1e-4) << name;
}

namespace dscf {
void PrintTo(Variant v, std::ostream* os) { *os << to_string(v); }
} // namespace dscf

INSTANTIATE_TEST_SUITE_P(All, VariantGradients, ::testing::ValuesIn(kAllVariants),
                         [](const auto& info) { return std::string(to_string(info.param)); });
