#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dscf/data.hpp"
#include "dscf/errors.hpp"
#include "dscf/graph.hpp"
#include "dscf/io.hpp"
#include "dscf/rng.hpp"

namespace dscf {

/// aᵀb / (|a| |b|). A zero-norm input has similarity 0 by convention.
template <std::floating_point Real>
double cosine_similarity(std::span<const Real> a, std::span<const Real> b) {
    if (a.size() != b.size())
        throw DimensionError("cosine_similarity: [" + std::to_string(a.size()) + "] vs [" + std::to_string(b.size()) + "]");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double cosine_similarity(std::initializer_list<double> a, std::initializer_list<double> b) {
    return cosine_similarity<double>(std::span<const double>(a.begin(), a.size()),
                                     std::span<const double>(b.begin(), b.size()));
}

/// One feature vector per item, used only to rank item similarity.
class ItemFeatureTable {
public:
    ItemFeatureTable() = default;
    ItemFeatureTable(std::size_t n_items, std::size_t dim) : n_items_(n_items), dim_(dim), data_(n_items * dim, 0.0) {}

    std::size_t n_items() const noexcept { return n_items_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<double> row(ItemId i) { return {data_.data() + static_cast<std::size_t>(i) * dim_, dim_}; }
    std::span<const double> row(ItemId i) const { return {data_.data() + static_cast<std::size_t>(i) * dim_, dim_}; }

    /// Call after filling rows; caches norms and checks finiteness.
    void finalize() {
        norms_.assign(n_items_, 0.0);
        for (std::size_t i = 0; i < n_items_; ++i) {
            double s = 0;
            for (const auto v : row(static_cast<ItemId>(i))) {
                if (!std::isfinite(v)) throw TrainingError("non-finite feature for item " + std::to_string(i));
                s += v * v;
            }
            norms_[i] = std::sqrt(s);
        }
    }

    /// Cosine similarity between two items; an item is exactly 1 with itself
    /// unless its vector is zero.
    double similarity(ItemId a, ItemId b) const {
        if (norms_.size() != n_items_) throw StateError("ItemFeatureTable::finalize() not called");
        if (norms_[a] == 0.0 || norms_[b] == 0.0) return 0.0;
        if (a == b) return 1.0;
        const auto x = row(a);
        const auto y = row(b);
        double dot = 0;
        for (std::size_t i = 0; i < dim_; ++i) dot += x[i] * y[i];
        return std::clamp(dot / (norms_[a] * norms_[b]), -1.0, 1.0);
    }

    // Binary layout: "DSCFFEAT", u32 version (1), u64 n_items, u64 dim,
    // then n_items * dim little-endian f64 values.
    void save(std::ostream& os) const {
        io::write_magic(os, "DSCFFEAT");
        io::write_le<std::uint32_t>(os, 1);
        io::write_le<std::uint64_t>(os, n_items_);
        io::write_le<std::uint64_t>(os, dim_);
        for (const auto v : data_) io::write_le<double>(os, v);
    }

    static ItemFeatureTable load(std::istream& is) {
        io::expect_magic(is, "DSCFFEAT", "item feature");
        if (io::read_le<std::uint32_t>(is) != 1) throw FormatError("unsupported feature file version");
        const auto n = io::read_le<std::uint64_t>(is);
        const auto d = io::read_le<std::uint64_t>(is);
        ItemFeatureTable t(n, d);
        for (auto& v : t.data_) v = io::read_le<double>(is);
        t.finalize();
        return t;
    }

private:
    std::size_t n_items_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
    std::vector<double> norms_;
};

struct ItemRating {
    ItemId item = 0;
    Level rating = 0;
    friend bool operator==(const ItemRating&, const ItemRating&) = default;
};

/// Per-user train interactions sorted by item id.
class TrainIndex {
public:
    TrainIndex() = default;
    explicit TrainIndex(const RatingDataset& ds) : by_user_(ds.n_users()) {
        for (const auto i : ds.indices(Split::train)) {
            const auto& t = ds.triple(i);
            by_user_[t.user].push_back({t.item, t.rating});
        }
        for (auto& v : by_user_)
            std::sort(v.begin(), v.end(), [](const ItemRating& a, const ItemRating& b) { return a.item < b.item; });
    }

    std::span<const ItemRating> items(UserId u) const { return by_user_.at(u); }

    std::optional<Level> rating(UserId u, ItemId v) const {
        const auto& list = by_user_.at(u);
        auto it = std::lower_bound(list.begin(), list.end(), v, [](const ItemRating& a, ItemId x) { return a.item < x; });
        if (it == list.end() || it->item != v) return std::nullopt;
        return it->rating;
    }

private:
    std::vector<std::vector<ItemRating>> by_user_;
};

/// argmax over the neighbor's train items of similarity to `target_item`,
/// smallest item id on ties. `exclude` removes one item from the candidates.
inline std::optional<ItemRating> select_relevant_item(UserId neighbor, ItemId target_item, const TrainIndex& train,
                                                      const ItemFeatureTable& features,
                                                      std::optional<ItemId> exclude = std::nullopt) {
    std::optional<ItemRating> best;
    double best_sim = -2.0;
    for (const auto& ir : train.items(neighbor)) {
        if (exclude && ir.item == *exclude) continue;
        const double s = features.similarity(ir.item, target_item);
        if (s > best_sim) {  // items are ascending, so strict > keeps the smallest id on ties
            best_sim = s;
            best = ir;
        }
    }
    return best;
}

struct SequenceStep {
    UserId user = 0;
    ItemId item = 0;
    Level rating = 0;  // 0 marks a padding step
    friend bool operator==(const SequenceStep&, const SequenceStep&) = default;
};

/// Reserved padding ids: user N, item M, rating 0.
struct Padding {
    UserId user = 0;
    ItemId item = 0;

    static Padding for_dataset(const RatingDataset& ds) {
        return {static_cast<UserId>(ds.n_users()), static_cast<ItemId>(ds.n_items())};
    }
    SequenceStep step() const { return {user, item, 0}; }
};

struct ItemAwareSequence {
    UserId target_user = 0;
    ItemId target_item = 0;
    std::vector<SequenceStep> steps;
    bool padded = false;
};

/// Turns one walk into an item-aware sequence for (target_user, target_item).
///
/// Each walked user contributes its most similar train item and that
/// rating. A step becomes padding when the walk had stalled at that point
/// or the user has no usable train interaction. When the walk revisits the
/// target user, the (target_user, target_item) interaction itself is not a
/// candidate, so a train label never appears in its own input.
inline ItemAwareSequence to_item_aware(const UserSequence& walk, ItemId target_item, const TrainIndex& train,
                                       const ItemFeatureTable& features, Padding pad) {
    ItemAwareSequence seq;
    seq.target_user = walk.root;
    seq.target_item = target_item;
    seq.steps.reserve(walk.steps.size());
    seq.padded = walk.padded();
    for (std::size_t k = 0; k < walk.steps.size(); ++k) {
        const UserId w = walk.steps[k];
        std::optional<ItemRating> pick;
        if (k < walk.valid_length) {
            const auto exclude = w == walk.root ? std::optional<ItemId>(target_item) : std::nullopt;
            pick = select_relevant_item(w, target_item, train, features, exclude);
        }
        if (pick) {
            seq.steps.push_back({w, pick->item, pick->rating});
        } else {
            seq.steps.push_back(pad.step());
            seq.padded = true;
        }
    }
    return seq;
}

/// Seed of the walk stream for a (user, item) pair.
inline std::uint64_t pair_seed(std::uint64_t seed, UserId u, ItemId v) {
    return derive_seed(seed, (static_cast<std::uint64_t>(u) << 32) | v);
}

/// H independent walks of length l from target_user, each converted to an
/// item-aware sequence. Deterministic in (seed, target_user, target_item).
template <class Policy = UniformTransition>
std::vector<ItemAwareSequence> build_item_aware_sequences(UserId target_user, ItemId target_item, const SocialGraph& g,
                                                          const TrainIndex& train, const ItemFeatureTable& features,
                                                          std::size_t l, std::size_t H, std::uint64_t seed, Padding pad,
                                                          const Policy& policy = {}) {
    if (l == 0 || H == 0) throw DomainError("sequence length and count must be at least 1");
    Rng rng(pair_seed(seed, target_user, target_item));
    std::vector<ItemAwareSequence> out;
    out.reserve(H);
    for (std::size_t h = 0; h < H; ++h)
        out.push_back(to_item_aware(random_walk(g, target_user, l, rng, policy), target_item, train, features, pad));
    return out;
}

/// Item-aware sequences for a set of dataset triples, stored flat:
/// H sequences of l steps per covered triple.
class SequenceSet {
public:
    static constexpr std::int64_t kMissing = -1;

    SequenceSet() = default;
    SequenceSet(std::size_t n_triples, std::size_t l, std::size_t H, std::uint64_t seed, std::uint64_t dataset_hash)
        : l_(l), H_(H), seed_(seed), dataset_hash_(dataset_hash), slot_(n_triples, kMissing) {}

    std::size_t length() const noexcept { return l_; }
    std::size_t count() const noexcept { return H_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t dataset_hash() const noexcept { return dataset_hash_; }
    std::size_t n_triples() const noexcept { return slot_.size(); }
    std::size_t n_records() const noexcept { return records_.size(); }

    bool has(std::size_t triple) const { return triple < slot_.size() && slot_[triple] != kMissing; }

    void set(std::size_t triple, UserId u, ItemId v, const std::vector<ItemAwareSequence>& seqs) {
        if (seqs.size() != H_) throw DimensionError("expected " + std::to_string(H_) + " sequences per pair");
        std::int64_t s = slot_.at(triple);
        if (s == kMissing) {
            s = static_cast<std::int64_t>(records_.size());
            slot_[triple] = s;
            records_.push_back({triple, u, v});
            steps_.resize(steps_.size() + H_ * l_);
            padded_.resize(padded_.size() + H_);
        }
        for (std::size_t h = 0; h < H_; ++h) {
            if (seqs[h].steps.size() != l_) throw DimensionError("expected sequences of length " + std::to_string(l_));
            std::copy(seqs[h].steps.begin(), seqs[h].steps.end(), steps_.begin() + (s * H_ + h) * l_);
            padded_[s * H_ + h] = seqs[h].padded;
        }
    }

    std::span<const SequenceStep> steps(std::size_t triple, std::size_t h) const {
        const auto s = slot_.at(triple);
        if (s == kMissing) throw DomainError("no sequences for triple " + std::to_string(triple));
        return {steps_.data() + (s * H_ + h) * l_, l_};
    }
    bool padded(std::size_t triple, std::size_t h) const { return padded_[slot_.at(triple) * H_ + h]; }

    struct Record {
        std::size_t triple;
        UserId user;
        ItemId item;
    };
    const std::vector<Record>& records() const noexcept { return records_; }
    std::span<const SequenceStep> record_steps(std::size_t r, std::size_t h) const {
        return {steps_.data() + (r * H_ + h) * l_, l_};
    }

    // Binary cache layout (little-endian):
    //   "DSCFSEQS" magic, u32 version (1), u32 l, u32 H, u64 seed,
    //   u64 dataset hash, u64 triple count, u64 record count,
    //   then per record: u64 triple index, u32 user, u32 item, and H times
    //   { u8 padded flag, l times (u32 neighbor, u32 item, u32 rating) }.
    void save(std::ostream& os) const {
        io::write_magic(os, "DSCFSEQS");
        io::write_le<std::uint32_t>(os, 1);
        io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(l_));
        io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(H_));
        io::write_le<std::uint64_t>(os, seed_);
        io::write_le<std::uint64_t>(os, dataset_hash_);
        io::write_le<std::uint64_t>(os, slot_.size());
        io::write_le<std::uint64_t>(os, records_.size());
        for (std::size_t r = 0; r < records_.size(); ++r) {
            io::write_le<std::uint64_t>(os, records_[r].triple);
            io::write_le<std::uint32_t>(os, records_[r].user);
            io::write_le<std::uint32_t>(os, records_[r].item);
            for (std::size_t h = 0; h < H_; ++h) {
                io::write_le<std::uint8_t>(os, padded_[r * H_ + h] ? 1 : 0);
                for (const auto& st : record_steps(r, h)) {
                    io::write_le<std::uint32_t>(os, st.user);
                    io::write_le<std::uint32_t>(os, st.item);
                    io::write_le<std::uint32_t>(os, st.rating);
                }
            }
        }
        if (!os) throw std::runtime_error("sequence cache write failed");
    }

    static SequenceSet load(std::istream& is) {
        io::expect_magic(is, "DSCFSEQS", "sequence cache");
        if (io::read_le<std::uint32_t>(is) != 1) throw FormatError("unsupported sequence cache version");
        const auto l = io::read_le<std::uint32_t>(is);
        const auto H = io::read_le<std::uint32_t>(is);
        const auto seed = io::read_le<std::uint64_t>(is);
        const auto hash = io::read_le<std::uint64_t>(is);
        const auto n_triples = io::read_le<std::uint64_t>(is);
        const auto n_records = io::read_le<std::uint64_t>(is);
        SequenceSet set(n_triples, l, H, seed, hash);
        std::vector<ItemAwareSequence> seqs(H);
        for (std::uint64_t r = 0; r < n_records; ++r) {
            const auto triple = io::read_le<std::uint64_t>(is);
            const auto u = io::read_le<std::uint32_t>(is);
            const auto v = io::read_le<std::uint32_t>(is);
            if (triple >= n_triples) throw FormatError("sequence record for triple outside dataset");
            for (auto& s : seqs) {
                s.target_user = u;
                s.target_item = v;
                s.padded = io::read_le<std::uint8_t>(is) != 0;
                s.steps.resize(l);
                for (auto& st : s.steps) {
                    st.user = io::read_le<std::uint32_t>(is);
                    st.item = io::read_le<std::uint32_t>(is);
                    st.rating = io::read_le<std::uint32_t>(is);
                }
            }
            set.set(triple, u, v, seqs);
        }
        return set;
    }

private:
    std::size_t l_ = 0;
    std::size_t H_ = 0;
    std::uint64_t seed_ = 0;
    std::uint64_t dataset_hash_ = 0;
    std::vector<std::int64_t> slot_;
    std::vector<Record> records_;
    std::vector<SequenceStep> steps_;
    std::vector<bool> padded_;
};

/// Builds sequences for every triple in the requested partitions (all by default).
template <class Policy = UniformTransition>
SequenceSet build_sequence_set(const RatingDataset& ds, const SocialGraph& g, const TrainIndex& train,
                               const ItemFeatureTable& features, std::size_t l, std::size_t H, std::uint64_t seed,
                               std::initializer_list<Split> splits = {Split::train, Split::val, Split::test},
                               const Policy& policy = {}) {
    if (features.n_items() != ds.n_items())
        throw DimensionError("feature table covers " + std::to_string(features.n_items()) + " items, dataset has " +
                             std::to_string(ds.n_items()));
    if (g.n_users() != ds.n_users())
        throw DimensionError("graph covers " + std::to_string(g.n_users()) + " users, dataset has " +
                             std::to_string(ds.n_users()));
    SequenceSet set(ds.size(), l, H, seed, ds.hash());
    const auto pad = Padding::for_dataset(ds);
    for (const auto split : splits)
        for (const auto i : ds.indices(split)) {
            const auto& t = ds.triple(i);
            set.set(i, t.user, t.item,
                    build_item_aware_sequences(t.user, t.item, g, train, features, l, H, seed, pad, policy));
        }
    return set;
}

} // namespace dscf
