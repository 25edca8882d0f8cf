#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dscf/data.hpp"
#include "dscf/errors.hpp"
#include "dscf/rng.hpp"

namespace dscf {

struct DegreeStats {
    std::size_t min = 0;
    std::size_t max = 0;
    double mean = 0.0;
    std::size_t isolated = 0;
    std::size_t edges = 0;  // stored adjacency entries
};

/// Social network in compressed sparse row form. Neighbor lists are sorted,
/// free of duplicates and self-loops. Immutable after construction.
class SocialGraph {
public:
    SocialGraph() : offsets_(1, 0) {}

    /// In undirected mode every edge is inserted both ways.
    SocialGraph(std::span<const TrustEdge> edges, std::size_t n_users, bool directed = false)
        : n_users_(n_users), directed_(directed) {
        std::vector<std::vector<UserId>> adj(n_users);
        for (const auto& e : edges) {
            if (e.source >= n_users || e.target >= n_users)
                throw DomainError("edge (" + std::to_string(e.source) + ", " + std::to_string(e.target) +
                                  ") outside user range " + std::to_string(n_users));
            if (e.source == e.target) continue;
            adj[e.source].push_back(e.target);
            if (!directed) adj[e.target].push_back(e.source);
        }
        offsets_.assign(n_users + 1, 0);
        for (std::size_t u = 0; u < n_users; ++u) {
            auto& a = adj[u];
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
            offsets_[u + 1] = offsets_[u] + a.size();
        }
        neighbors_.reserve(offsets_.back());
        for (auto& a : adj) neighbors_.insert(neighbors_.end(), a.begin(), a.end());

        stats_.edges = neighbors_.size();
        stats_.min = n_users ? SIZE_MAX : 0;
        for (std::size_t u = 0; u < n_users; ++u) {
            const auto deg = degree(static_cast<UserId>(u));
            stats_.min = std::min(stats_.min, deg);
            stats_.max = std::max(stats_.max, deg);
            if (deg == 0) ++stats_.isolated;
        }
        stats_.mean = n_users ? static_cast<double>(stats_.edges) / static_cast<double>(n_users) : 0.0;
    }

    std::size_t n_users() const noexcept { return n_users_; }
    bool directed() const noexcept { return directed_; }

    std::span<const UserId> neighbors(UserId u) const {
        return {neighbors_.data() + offsets_[u], neighbors_.data() + offsets_[u + 1]};
    }
    std::size_t degree(UserId u) const { return offsets_[u + 1] - offsets_[u]; }

    bool has_edge(UserId a, UserId b) const {
        const auto n = neighbors(a);
        return std::binary_search(n.begin(), n.end(), b);
    }

    const DegreeStats& stats() const noexcept { return stats_; }

private:
    std::size_t n_users_ = 0;
    bool directed_ = false;
    std::vector<std::size_t> offsets_;
    std::vector<UserId> neighbors_;
    DegreeStats stats_;
};

inline SocialGraph build_graph(std::span<const TrustEdge> edges, std::size_t n_users, bool directed = false) {
    return SocialGraph(edges, n_users, directed);
}

/// Fixed-length walk rooted at `root`. The root itself is not part of
/// `steps`. Steps at index >= `valid_length` are padding: the walk stalled
/// on a node without out-neighbors and the last visited user (or the root,
/// when it has no neighbors at all) is repeated.
struct UserSequence {
    UserId root = 0;
    std::vector<UserId> steps;
    std::size_t valid_length = 0;

    bool padded() const noexcept { return valid_length < steps.size(); }
};

/// Uniform choice among the current node's neighbors.
struct UniformTransition {
    UserId operator()(const SocialGraph& g, UserId /*previous*/, UserId current, Rng& rng) const {
        const auto n = g.neighbors(current);
        return n[rng.uniform_index(n.size())];
    }
};

/// Unconstrained random walk (revisits allowed, no restart). `policy` picks
/// the next node given (graph, previous, current, rng) and is only invoked
/// on nodes with at least one neighbor.
template <class Policy = UniformTransition>
UserSequence random_walk(const SocialGraph& g, UserId root, std::size_t length, Rng& rng, const Policy& policy = {}) {
    if (root >= g.n_users())
        throw DomainError("walk root " + std::to_string(root) + " outside user range " + std::to_string(g.n_users()));
    if (length == 0) throw DomainError("walk length must be at least 1");
    UserSequence seq;
    seq.root = root;
    seq.steps.reserve(length);
    UserId previous = root;
    UserId current = root;
    while (seq.steps.size() < length) {
        if (g.degree(current) == 0) break;
        const UserId next = policy(g, previous, current, rng);
        previous = current;
        current = next;
        seq.steps.push_back(current);
    }
    seq.valid_length = seq.steps.size();
    seq.steps.resize(length, current);
    return seq;
}

/// Walk corpus dump: a header comment, then one walk per line as
/// space-separated user ids, the root first.
inline void write_walk_corpus(std::ostream& os, std::span<const UserSequence> walks, std::uint64_t seed,
                              std::size_t length) {
    os << "# dscf-walks seed=" << seed << " length=" << length << " count=" << walks.size() << " root-first\n";
    for (const auto& w : walks) {
        os << w.root;
        for (const auto s : w.steps) os << ' ' << s;
        os << '\n';
    }
}

} // namespace dscf
