#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "dscf/data.hpp"
#include "dscf/rng.hpp"

namespace dscf {

/// Planted-homophily generator.
///
/// Users sit on a ring. Trust edges join ring neighbors within
/// `local_radius` (each kept with `local_edge_prob`) plus a few random
/// long-range edges. Items fall into `n_clusters` categories. For every
/// category a taste profile varies smoothly around the ring with
/// correlation length `taste_correlation` (in ring positions), so a user's
/// rating of an item is a noisy function of how nearby users rate items of
/// the same category, and far-away users carry little information.
struct SyntheticConfig {
    std::size_t n_users = 200;
    std::size_t n_items = 300;
    std::size_t n_clusters = 4;
    std::size_t ratings_per_user = 8;     // light raters
    double heavy_fraction = 0.5;          // share of users who rate `heavy_ratings` items
    std::size_t heavy_ratings = 80;
    std::size_t local_radius = 2;
    double local_edge_prob = 0.6;
    double random_edges_per_user = 0.15;
    double taste_correlation = 2.0;
    double taste_scale = 1.3;
    double item_bias_scale = 0.3;
    double noise = 0.4;
    std::uint64_t seed = 1;
};

struct SyntheticData {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    int n_levels = 5;
    std::vector<RatingTriple> triples;
    std::vector<TrustEdge> edges;
    std::vector<std::size_t> item_cluster;
    std::vector<std::size_t> user_position;

    RatingDataset split(double train_fraction, std::uint64_t seed) const {
        return split_dataset(triples, n_users, n_items, n_levels, train_fraction, seed);
    }
};

inline SyntheticData make_synthetic(const SyntheticConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, 0x5e7));
    SyntheticData out;
    out.n_users = cfg.n_users;
    out.n_items = cfg.n_items;
    const auto N = cfg.n_users;

    // ring position of each user id
    out.user_position.resize(N);
    std::iota(out.user_position.begin(), out.user_position.end(), std::size_t{0});
    rng.shuffle(out.user_position.begin(), out.user_position.end());
    std::vector<UserId> at_position(N);
    for (std::size_t u = 0; u < N; ++u) at_position[out.user_position[u]] = static_cast<UserId>(u);

    std::set<std::pair<UserId, UserId>> edge_set;
    auto add_edge = [&](UserId a, UserId b) {
        if (a == b) return;
        if (a > b) std::swap(a, b);
        edge_set.emplace(a, b);
    };
    for (std::size_t pos = 0; pos < N; ++pos) {
        for (std::size_t r = 1; r <= cfg.local_radius; ++r)
            if (rng.uniform01() < cfg.local_edge_prob) add_edge(at_position[pos], at_position[(pos + r) % N]);
        // keep the ring connected
        bool has_any = false;
        for (const auto& e : edge_set)
            if (e.first == at_position[pos] || e.second == at_position[pos]) {
                has_any = true;
                break;
            }
        if (!has_any) add_edge(at_position[pos], at_position[(pos + 1) % N]);
    }
    const auto n_random = static_cast<std::size_t>(std::llround(cfg.random_edges_per_user * static_cast<double>(N)));
    for (std::size_t k = 0; k < n_random; ++k)
        add_edge(static_cast<UserId>(rng.uniform_index(N)), static_cast<UserId>(rng.uniform_index(N)));
    for (const auto& [a, b] : edge_set) out.edges.push_back({a, b});

    // item categories and biases
    out.item_cluster.resize(cfg.n_items);
    for (std::size_t i = 0; i < cfg.n_items; ++i) out.item_cluster[i] = i % cfg.n_clusters;
    rng.shuffle(out.item_cluster.begin(), out.item_cluster.end());
    std::vector<std::vector<ItemId>> cluster_items(cfg.n_clusters);
    for (std::size_t i = 0; i < cfg.n_items; ++i) cluster_items[out.item_cluster[i]].push_back(static_cast<ItemId>(i));
    std::vector<double> item_bias(cfg.n_items);
    for (auto& b : item_bias) b = cfg.item_bias_scale * rng.normal();

    // smooth taste profiles: circular moving average of white noise,
    // rescaled to unit variance
    std::vector<std::vector<double>> taste(cfg.n_clusters, std::vector<double>(N));
    const auto half = static_cast<long>(std::ceil(cfg.taste_correlation));
    for (auto& profile : taste) {
        std::vector<double> white(N);
        for (auto& w : white) w = rng.normal();
        for (std::size_t pos = 0; pos < N; ++pos) {
            double s = 0;
            for (long o = -half; o <= half; ++o) s += white[(pos + N + static_cast<std::size_t>(o + static_cast<long>(N))) % N];
            profile[pos] = s / std::sqrt(static_cast<double>(2 * half + 1));
        }
    }

    for (std::size_t u = 0; u < N; ++u) {
        std::set<ItemId> chosen;
        const auto want = rng.uniform01() < cfg.heavy_fraction ? cfg.heavy_ratings : cfg.ratings_per_user;
        while (chosen.size() < std::min(want, cfg.n_items)) {
            const auto c = rng.uniform_index(cfg.n_clusters);
            const auto& items = cluster_items[c];
            chosen.insert(items[rng.uniform_index(items.size())]);
        }
        for (const auto i : chosen) {
            const double mean = 3.0 + cfg.taste_scale * taste[out.item_cluster[i]][out.user_position[u]] + item_bias[i];
            const double r = std::round(mean + cfg.noise * rng.normal());
            out.triples.push_back({static_cast<UserId>(u), i, static_cast<Level>(std::clamp(r, 1.0, 5.0))});
        }
    }
    return out;
}

} // namespace dscf
