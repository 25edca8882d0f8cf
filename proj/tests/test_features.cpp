#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "dscf/features.hpp"
#include "dscf/synthetic.hpp"

using namespace dscf;

namespace {

ItemFeatureTable table(const std::vector<std::vector<double>>& rows) {
    ItemFeatureTable t(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), t.row(static_cast<ItemId>(i)).begin());
    t.finalize();
    return t;
}

RatingDataset train_only(std::size_t n_users, std::size_t n_items, std::vector<RatingTriple> t) {
    std::vector<Split> s(t.size(), Split::train);
    return RatingDataset(n_users, n_items, 5, std::move(t), std::move(s));
}

// Running example: users 1..7, items 1..7. v3 and v5 point the same way,
// everything else is orthogonal to them.
struct Figure {
    RatingDataset ds = train_only(8, 8,
                                  {{1, 1, 4},
                                   {2, 3, 4},
                                   {2, 1, 2},
                                   {3, 5, 2},
                                   {3, 2, 5},
                                   {6, 5, 3},
                                   {6, 4, 1},
                                   {7, 3, 5},
                                   {7, 6, 2}});
    ItemFeatureTable features = table({{1, 1, 1, 1},
                                       {1, 0, 0, 0},
                                       {0, 1, 0, 0},
                                       {0, 0, 1, 0},
                                       {0, 0, 0, 1},
                                       {0, 0, 0.9, 0.1},
                                       {-1, 0, 0, 0},
                                       {0, -1, 0, 0}});
    TrainIndex train{ds};
};

} // namespace

TEST(Cosine, Examples) {
    EXPECT_DOUBLE_EQ(cosine_similarity({0.3, -2.0, 5.0}, {0.3, -2.0, 5.0}), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity({1, 0}, {0, 1}), 0.0);
    EXPECT_NEAR(cosine_similarity({1, 0}, {1, 1}), 0.7071, 1e-4);
    EXPECT_DOUBLE_EQ(cosine_similarity({0, 0}, {1, 1}), 0.0);
    EXPECT_THROW(cosine_similarity({1, 0}, {1, 0, 0}), DimensionError);
}

TEST(FeatureTable, SimilarityAndRoundTrip) {
    const auto t = table({{1, 0}, {1, 1}, {0, 0}});
    EXPECT_NEAR(t.similarity(0, 1), std::sqrt(0.5), 1e-12);
    EXPECT_EQ(t.similarity(2, 2), 0.0);
    EXPECT_EQ(t.similarity(1, 1), 1.0);
    std::stringstream ss;
    t.save(ss);
    const auto back = ItemFeatureTable::load(ss);
    EXPECT_EQ(back.n_items(), 3u);
    EXPECT_EQ(back.similarity(0, 1), t.similarity(0, 1));
}

TEST(FeatureTable, RejectsNonFinite) {
    ItemFeatureTable t(1, 2);
    t.row(0)[0] = std::nan("");
    EXPECT_THROW(t.finalize(), TrainingError);
}

TEST(SelectItem, FigureNeighbor) {
    Figure f;
    const auto pick = select_relevant_item(3, 3, f.train, f.features);
    ASSERT_TRUE(pick);
    EXPECT_EQ(pick->item, 5u);
    EXPECT_EQ(pick->rating, 2u);
}

TEST(SelectItem, OnlyTargetItem) {
    const auto ds = train_only(2, 3, {{1, 2, 4}});
    const TrainIndex ti(ds);
    const auto f = table({{1, 0}, {0, 1}, {1, 1}});
    const auto pick = select_relevant_item(1, 2, ti, f);
    ASSERT_TRUE(pick);
    EXPECT_EQ(*pick, (ItemRating{2, 4}));
    EXPECT_FALSE(select_relevant_item(0, 2, ti, f));
}

TEST(SelectItem, TieTakesSmallestId) {
    const auto ds = train_only(1, 3, {{0, 2, 1}, {0, 1, 5}});
    const TrainIndex ti(ds);
    const auto f = table({{1, 0}, {2, 0}, {3, 0}});
    EXPECT_EQ(select_relevant_item(0, 0, ti, f)->item, 1u);
}

TEST(SelectItem, BruteForceOracle) {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<double>> rows(6, std::vector<double>(3));
        for (auto& r : rows)
            for (auto& x : r) x = rng.uniform(-1, 1);
        const auto f = table(rows);
        std::vector<RatingTriple> t;
        for (ItemId i = 0; i < 6; ++i)
            if (rng.uniform01() < 0.5) t.push_back({0, i, static_cast<Level>(1 + rng.uniform_index(5))});
        const auto ds = train_only(1, 6, t);
        const TrainIndex ti(ds);
        const auto target = static_cast<ItemId>(rng.uniform_index(6));
        const auto pick = select_relevant_item(0, target, ti, f);
        if (t.empty()) {
            EXPECT_FALSE(pick);
            continue;
        }
        // independent enumeration with plain cosine
        double best = -10;
        ItemId arg = 0;
        for (ItemId i = 0; i < 6; ++i) {
            bool rated = false;
            for (const auto& x : t) rated |= x.item == i;
            if (!rated) continue;
            double dot = 0, na = 0, nb = 0;
            for (int k = 0; k < 3; ++k) {
                dot += rows[i][k] * rows[target][k];
                na += rows[i][k] * rows[i][k];
                nb += rows[target][k] * rows[target][k];
            }
            const double c = dot / std::sqrt(na * nb);
            if (c > best + 1e-12) {
                best = c;
                arg = i;
            }
        }
        ASSERT_TRUE(pick);
        EXPECT_EQ(pick->item, arg);
    }
}

TEST(ItemAware, FigureSequence) {
    Figure f;
    UserSequence walk{1, {2, 3, 6, 7}, 4};
    const auto seq = to_item_aware(walk, 3, f.train, f.features, Padding::for_dataset(f.ds));
    const std::vector<SequenceStep> expected{{2, 3, 4}, {3, 5, 2}, {6, 5, 3}, {7, 3, 5}};
    EXPECT_EQ(seq.steps, expected);
    EXPECT_FALSE(seq.padded);
}

TEST(ItemAware, StallAndEmptyNeighborBecomePadding) {
    Figure f;
    const auto pad = Padding::for_dataset(f.ds);
    UserSequence walk{1, {2, 5, 5}, 2};  // user 5 has no train ratings; third step is a stall
    const auto seq = to_item_aware(walk, 3, f.train, f.features, pad);
    EXPECT_EQ(seq.steps[0], (SequenceStep{2, 3, 4}));
    EXPECT_EQ(seq.steps[1], pad.step());
    EXPECT_EQ(seq.steps[2], pad.step());
    EXPECT_TRUE(seq.padded);
    EXPECT_EQ(pad.step(), (SequenceStep{8, 8, 0}));
}

TEST(ItemAware, RevisitedRootSkipsOwnLabel) {
    Figure f;
    UserSequence walk{2, {1, 2}, 2};
    const auto seq = to_item_aware(walk, 3, f.train, f.features, Padding::for_dataset(f.ds));
    EXPECT_EQ(seq.steps[1], (SequenceStep{2, 1, 2}));
}

TEST(ItemAware, IsolatedUserFullyPadded) {
    Figure f;
    const std::vector<TrustEdge> e{{1, 2}, {2, 3}};
    const auto g = build_graph(e, 8);
    const auto pad = Padding::for_dataset(f.ds);
    const auto seqs = build_item_aware_sequences(4, 3, g, f.train, f.features, 3, 5, 1, pad);
    ASSERT_EQ(seqs.size(), 5u);
    for (const auto& s : seqs) {
        EXPECT_TRUE(s.padded);
        for (const auto& st : s.steps) EXPECT_EQ(st, pad.step());
    }
}

TEST(ItemAware, DeterministicPerPair) {
    Figure f;
    const std::vector<TrustEdge> e{{1, 2}, {2, 3}, {3, 6}, {6, 7}, {1, 7}};
    const auto g = build_graph(e, 8);
    const auto pad = Padding::for_dataset(f.ds);
    const auto a = build_item_aware_sequences(1, 3, g, f.train, f.features, 4, 3, 9, pad);
    const auto b = build_item_aware_sequences(1, 3, g, f.train, f.features, 4, 3, 9, pad);
    for (std::size_t h = 0; h < 3; ++h) EXPECT_EQ(a[h].steps, b[h].steps);
}

TEST(ItemAware, StepsAreTrainInteractions) {
    SyntheticConfig sc;
    sc.n_users = 40;
    sc.n_items = 30;
    sc.heavy_ratings = 12;
    sc.seed = 4;
    const auto syn = make_synthetic(sc);
    const auto ds = syn.split(0.6, 4);
    const auto g = build_graph(syn.edges, syn.n_users);
    const TrainIndex ti(ds);
    ItemFeatureTable f(ds.n_items(), 3);
    Rng rng(8);
    for (ItemId i = 0; i < ds.n_items(); ++i)
        for (auto& x : f.row(i)) x = rng.normal();
    f.finalize();
    const auto seqs = build_sequence_set(ds, g, ti, f, 4, 50, 3);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t h = 0; h < 50; ++h)
            for (const auto& st : seqs.steps(i, h)) {
                if (st.rating == 0) continue;
                const auto r = ti.rating(st.user, st.item);
                ASSERT_TRUE(r);
                EXPECT_EQ(*r, st.rating);
                ++checked;
            }
    EXPECT_GT(checked, 1000u);
}

TEST(SequenceCache, RoundTripAndMissing) {
    Figure f;
    const std::vector<TrustEdge> e{{1, 2}, {2, 3}, {3, 6}, {6, 7}};
    const auto g = build_graph(e, 8);
    const auto set = build_sequence_set(f.ds, g, f.train, f.features, 3, 2, 5);
    std::stringstream ss;
    set.save(ss);
    const auto back = SequenceSet::load(ss);
    EXPECT_EQ(back.length(), 3u);
    EXPECT_EQ(back.count(), 2u);
    EXPECT_EQ(back.dataset_hash(), f.ds.hash());
    for (std::size_t i = 0; i < f.ds.size(); ++i)
        for (std::size_t h = 0; h < 2; ++h) {
            const auto a = set.steps(i, h);
            const auto b = back.steps(i, h);
            EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
            EXPECT_EQ(set.padded(i, h), back.padded(i, h));
        }
    SequenceSet empty(3, 2, 2, 1, 0);
    EXPECT_THROW(empty.steps(1, 0), DomainError);
}
