#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dscf/errors.hpp"
#include "dscf/io.hpp"
#include "dscf/rng.hpp"

namespace dscf {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using Level = std::uint32_t;  // rating level 1..I; 0 is reserved for padding

struct RatingTriple {
    UserId user = 0;
    ItemId item = 0;
    Level rating = 0;

    friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

struct TrustEdge {
    UserId source = 0;
    UserId target = 0;

    friend bool operator==(const TrustEdge&, const TrustEdge&) = default;
};

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

inline std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val" || s == "validation") return Split::val;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split label '" + std::string(s) + "'");
}

/// Record layout of an input file.
///  - tsv:      `user<TAB>item<TAB>rating` / `user<TAB>friend`
///  - mat_text: whitespace-separated text export of the Ciao/Epinions matrix
///              files: `user item category rating [helpfulness...]` for
///              ratings, `user trustee [...]` for trust.
enum class IngestFormat { tsv, mat_text };

inline IngestFormat parse_ingest_format(std::string_view s) {
    if (s == "tsv") return IngestFormat::tsv;
    if (s == "mat-text" || s == "mat_text") return IngestFormat::mat_text;
    throw ConfigError("unknown ingest format '" + std::string(s) + "' (expected tsv or mat-text)");
}

/// Bijection between raw string identifiers and dense indices 0..n-1,
/// assigned in order of first appearance.
class IdMap {
public:
    std::uint32_t intern(std::string_view raw) {
        auto [it, inserted] = index_.try_emplace(std::string(raw), static_cast<std::uint32_t>(raw_.size()));
        if (inserted) raw_.emplace_back(raw);
        return it->second;
    }

    std::optional<std::uint32_t> find(std::string_view raw) const {
        auto it = index_.find(std::string(raw));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& raw(std::uint32_t dense) const { return raw_.at(dense); }
    std::size_t size() const noexcept { return raw_.size(); }

    static IdMap identity(std::size_t n) {
        IdMap m;
        for (std::size_t i = 0; i < n; ++i) m.intern(std::to_string(i));
        return m;
    }

private:
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::string> raw_;
};

struct LoadedRatings {
    std::vector<RatingTriple> triples;
    IdMap users;
    IdMap items;
    std::size_t records = 0;             // data lines read
    std::size_t duplicates_replaced = 0;  // records that overwrote an earlier (user, item)
};

struct LoadedTrust {
    std::vector<TrustEdge> edges;
    std::size_t records = 0;
    std::size_t dropped_unknown = 0;
    std::size_t dropped_self_loops = 0;
    std::size_t dropped_duplicates = 0;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, IngestFormat fmt) {
    std::vector<std::string_view> out;
    if (fmt == IngestFormat::tsv) {
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
    } else {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',')) ++i;
            const auto start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != ',') ++i;
            if (i > start) out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

inline bool skip_line(std::string_view line) { return line.empty() || line.front() == '#'; }

/// Parses an integer rating; accepts integral decimals such as "4.0".
inline std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace detail

/// Reads rating records, remapping raw ids to dense indices. A repeated
/// (user, item) keeps the position of its first occurrence and the rating
/// of its last.
inline LoadedRatings load_ratings(std::istream& is, const std::string& name, IngestFormat fmt = IngestFormat::tsv,
                                  int n_levels = 5) {
    LoadedRatings out;
    std::unordered_map<std::uint64_t, std::size_t> position;
    std::string line;
    std::size_t lineno = 0;
    const std::size_t rating_col = fmt == IngestFormat::tsv ? 2 : 3;
    while (std::getline(is, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (detail::skip_line(view)) continue;
        const auto fields = detail::split_fields(view, fmt);
        if (fields.size() < rating_col + 1 || (fmt == IngestFormat::tsv && fields.size() != 3))
            throw ParseError(name, lineno, "expected " + std::to_string(rating_col + 1) + " fields, got " +
                                               std::to_string(fields.size()));
        for (std::size_t f = 0; f <= rating_col; ++f)
            if (fields[f].empty()) throw ParseError(name, lineno, "empty field " + std::to_string(f + 1));
        const auto value = detail::parse_number(fields[rating_col]);
        if (!value) throw ParseError(name, lineno, "rating '" + std::string(fields[rating_col]) + "' is not a number");
        if (*value != std::floor(*value) || *value < 1.0 || *value > n_levels)
            throw ValidationError(name + ":" + std::to_string(lineno) + ": rating " + std::string(fields[rating_col]) +
                                  " outside integer range [1, " + std::to_string(n_levels) + "]");
        ++out.records;
        const UserId u = out.users.intern(fields[0]);
        const ItemId v = out.items.intern(fields[1]);
        const auto key = (static_cast<std::uint64_t>(u) << 32) | v;
        const RatingTriple t{u, v, static_cast<Level>(*value)};
        if (auto it = position.find(key); it != position.end()) {
            out.triples[it->second].rating = t.rating;
            ++out.duplicates_replaced;
        } else {
            position.emplace(key, out.triples.size());
            out.triples.push_back(t);
        }
    }
    return out;
}

inline LoadedRatings load_ratings(const std::string& path, IngestFormat fmt = IngestFormat::tsv, int n_levels = 5) {
    auto is = io::open_in(path, false);
    return load_ratings(is, path, fmt, n_levels);
}

/// Reads trust records against the user mapping of the rating file. Edges
/// touching users without ratings are dropped and counted, as are
/// self-loops and repeated (source, target) pairs.
inline LoadedTrust load_trust(std::istream& is, const std::string& name, const IdMap& users,
                              IngestFormat fmt = IngestFormat::tsv) {
    LoadedTrust out;
    std::unordered_map<std::uint64_t, bool> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (detail::skip_line(view)) continue;
        const auto fields = detail::split_fields(view, fmt);
        if (fields.size() < 2 || (fmt == IngestFormat::tsv && fields.size() != 2))
            throw ParseError(name, lineno, "expected 2 fields, got " + std::to_string(fields.size()));
        if (fields[0].empty() || fields[1].empty()) throw ParseError(name, lineno, "empty user id");
        ++out.records;
        if (fields[0] == fields[1]) {
            ++out.dropped_self_loops;
            continue;
        }
        const auto a = users.find(fields[0]);
        const auto b = users.find(fields[1]);
        if (!a || !b) {
            ++out.dropped_unknown;
            continue;
        }
        const auto key = (static_cast<std::uint64_t>(*a) << 32) | *b;
        if (!seen.emplace(key, true).second) {
            ++out.dropped_duplicates;
            continue;
        }
        out.edges.push_back({*a, *b});
    }
    return out;
}

inline LoadedTrust load_trust(const std::string& path, const IdMap& users, IngestFormat fmt = IngestFormat::tsv) {
    auto is = io::open_in(path, false);
    return load_trust(is, path, users, fmt);
}

struct SplitCounts {
    std::size_t train = 0, val = 0, test = 0;
};

/// train = round(x * n) (halves away from zero); the remainder is halved
/// with val = floor(rest / 2) and test taking the odd triple.
inline SplitCounts split_counts(std::size_t n, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0, 1), got " + std::to_string(train_fraction));
    SplitCounts c;
    c.train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    const auto rest = n - c.train;
    c.val = rest / 2;
    c.test = rest - c.val;
    return c;
}

/// Ratings with their train/val/test partition. Immutable after construction.
class RatingDataset {
public:
    RatingDataset() = default;

    RatingDataset(std::size_t n_users, std::size_t n_items, int n_levels, std::vector<RatingTriple> triples,
                  std::vector<Split> partition)
        : n_users_(n_users), n_items_(n_items), n_levels_(n_levels), triples_(std::move(triples)),
          partition_(std::move(partition)) {
        if (partition_.size() != triples_.size())
            throw DimensionError("partition has " + std::to_string(partition_.size()) + " labels for " +
                                 std::to_string(triples_.size()) + " triples");
        for (const auto& t : triples_) {
            if (t.user >= n_users_ || t.item >= n_items_)
                throw DomainError("triple (" + std::to_string(t.user) + ", " + std::to_string(t.item) +
                                  ") outside id space " + std::to_string(n_users_) + "x" + std::to_string(n_items_));
            if (t.rating < 1 || t.rating > static_cast<Level>(n_levels_))
                throw ValidationError("rating " + std::to_string(t.rating) + " outside [1, " +
                                      std::to_string(n_levels_) + "]");
        }
        for (std::size_t i = 0; i < triples_.size(); ++i) by_split_[static_cast<int>(partition_[i])].push_back(i);
    }

    std::size_t n_users() const noexcept { return n_users_; }
    std::size_t n_items() const noexcept { return n_items_; }
    int n_levels() const noexcept { return n_levels_; }
    std::size_t size() const noexcept { return triples_.size(); }
    const std::vector<RatingTriple>& triples() const noexcept { return triples_; }
    const RatingTriple& triple(std::size_t i) const { return triples_[i]; }
    const std::vector<Split>& partition() const noexcept { return partition_; }
    Split split_of(std::size_t i) const { return partition_[i]; }

    /// Triple indices in one partition, ascending.
    const std::vector<std::size_t>& indices(Split s) const { return by_split_[static_cast<int>(s)]; }
    std::size_t count(Split s) const { return indices(s).size(); }

    /// Digest of the id spaces, triples and partition labels.
    std::uint64_t hash() const {
        io::Fnv1a h;
        h.update_int<std::uint64_t>(n_users_);
        h.update_int<std::uint64_t>(n_items_);
        h.update_int<std::uint32_t>(static_cast<std::uint32_t>(n_levels_));
        for (std::size_t i = 0; i < triples_.size(); ++i) {
            h.update_int(triples_[i].user);
            h.update_int(triples_[i].item);
            h.update_int(triples_[i].rating);
            h.update_int(static_cast<std::uint8_t>(partition_[i]));
        }
        return h.digest();
    }

private:
    std::size_t n_users_ = 0;
    std::size_t n_items_ = 0;
    int n_levels_ = 5;
    std::vector<RatingTriple> triples_;
    std::vector<Split> partition_;
    std::array<std::vector<std::size_t>, 3> by_split_;
};

/// Uniform random partition by triple, deterministic under `seed`.
inline RatingDataset split_dataset(std::vector<RatingTriple> triples, std::size_t n_users, std::size_t n_items,
                                   int n_levels, double train_fraction, std::uint64_t seed) {
    const auto counts = split_counts(triples.size(), train_fraction);
    std::vector<std::size_t> order(triples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x5b117));
    rng.shuffle(order.begin(), order.end());
    std::vector<Split> labels(triples.size(), Split::test);
    for (std::size_t k = 0; k < counts.train; ++k) labels[order[k]] = Split::train;
    for (std::size_t k = counts.train; k < counts.train + counts.val; ++k) labels[order[k]] = Split::val;
    return RatingDataset(n_users, n_items, n_levels, std::move(triples), std::move(labels));
}

inline RatingDataset split_dataset(const LoadedRatings& loaded, int n_levels, double train_fraction,
                                   std::uint64_t seed) {
    return split_dataset(loaded.triples, loaded.users.size(), loaded.items.size(), n_levels, train_fraction, seed);
}

/// Split manifest: one line per triple, `raw_user<TAB>raw_item<TAB>label`,
/// in dataset order.
inline void write_split_manifest(std::ostream& os, const RatingDataset& ds, const IdMap& users, const IdMap& items) {
    os << "# user\titem\tsplit\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& t = ds.triple(i);
        os << users.raw(t.user) << '\t' << items.raw(t.item) << '\t' << to_string(ds.split_of(i)) << '\n';
    }
}

/// Dense prepared form consumed by the later pipeline stages:
/// a header line, then `user<TAB>item<TAB>rating<TAB>split` per triple.
inline void write_prepared(std::ostream& os, const RatingDataset& ds) {
    os << "# dscf-dataset 1 " << ds.n_users() << ' ' << ds.n_items() << ' ' << ds.n_levels() << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& t = ds.triple(i);
        os << t.user << '\t' << t.item << '\t' << t.rating << '\t' << to_string(ds.split_of(i)) << '\n';
    }
}

inline RatingDataset read_prepared(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError(name, 1, "missing header");
    std::istringstream header(line);
    std::string hash_sign, tag;
    int version = 0;
    std::size_t n_users = 0, n_items = 0;
    int n_levels = 0;
    if (!(header >> hash_sign >> tag >> version >> n_users >> n_items >> n_levels) || tag != "dscf-dataset" ||
        version != 1)
        throw ParseError(name, 1, "bad prepared-dataset header");
    std::vector<RatingTriple> triples;
    std::vector<Split> labels;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (detail::skip_line(view)) continue;
        const auto f = detail::split_fields(view, IngestFormat::tsv);
        if (f.size() != 4) throw ParseError(name, lineno, "expected 4 fields");
        RatingTriple t;
        auto parse_u32 = [&](std::string_view s, std::uint32_t& v) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size())
                throw ParseError(name, lineno, "bad integer '" + std::string(s) + "'");
        };
        parse_u32(f[0], t.user);
        parse_u32(f[1], t.item);
        parse_u32(f[2], t.rating);
        triples.push_back(t);
        labels.push_back(parse_split(f[3]));
    }
    return RatingDataset(n_users, n_items, n_levels, std::move(triples), std::move(labels));
}

inline void write_trust_tsv(std::ostream& os, const std::vector<TrustEdge>& edges) {
    for (const auto& e : edges) os << e.source << '\t' << e.target << '\n';
}

} // namespace dscf
