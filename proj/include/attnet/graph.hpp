#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "attnet/errors.hpp"
#include "attnet/ising.hpp"

// Weighted connectivity of a network. Edge lengths are the reciprocals of
// absolute edge weights, so strong edges are short, and the average shortest
// path length over all node pairs measures global connectivity (lower = more
// connected).

namespace attnet {

constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

struct DistanceGraph {
    std::size_t n_nodes = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;
    std::size_t n_edges = 0;
};

inline DistanceGraph to_distance_graph(const IsingNetwork& net) {
    validate_network(net);
    DistanceGraph g;
    g.n_nodes = net.p();
    g.adjacency.resize(g.n_nodes);
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (std::size_t j = i + 1; j < g.n_nodes; ++j) {
            const double w = net.weight(i, j);
            if (w == 0.0) continue;
            const double length = 1.0 / std::fabs(w);
            g.adjacency[i].emplace_back(j, length);
            g.adjacency[j].emplace_back(i, length);
            ++g.n_edges;
        }
    }
    return g;
}

// Single-source shortest paths; unreachable nodes get +infinity. Ties in the
// priority queue break on the lower node index so traversal order is
// platform-independent.
inline std::vector<double> dijkstra(const DistanceGraph& g, std::size_t source) {
    if (source >= g.n_nodes) throw ContractError("dijkstra: source out of range");
    std::vector<double> dist(g.n_nodes, kInfiniteDistance);
    dist[source] = 0.0;
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
    queue.push({0.0, source});
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, length] : g.adjacency[u]) {
            const double cand = d + length;
            if (cand < dist[v]) {
                dist[v] = cand;
                queue.push({cand, v});
            }
        }
    }
    return dist;
}

struct AsplResult {
    double aspl = 0.0;
    std::vector<double> distances; // p*p, after infinite-path replacement
    std::size_t disconnected_pairs = 0;
    std::optional<double> replacement_value;

    double distance(std::size_t i, std::size_t j, std::size_t p) const {
        return distances[i * p + j];
    }
};

// Mean shortest path length over unordered node pairs. Pairs in different
// components have infinite distance; each such distance is replaced by the
// largest finite pairwise distance in the same network, which can only lower
// the average (a conservative, connectivity-inflating convention).
inline AsplResult aspl(const IsingNetwork& net) {
    const std::size_t p = net.p();
    if (p < 2) throw ContractError("aspl: need at least 2 nodes");
    const DistanceGraph g = to_distance_graph(net);

    AsplResult result;
    result.distances.assign(p * p, 0.0);
    double max_finite = -1.0;
    for (std::size_t s = 0; s < p; ++s) {
        const std::vector<double> d = dijkstra(g, s);
        for (std::size_t t = 0; t < p; ++t) {
            result.distances[s * p + t] = d[t];
            if (t != s && std::isfinite(d[t])) max_finite = std::max(max_finite, d[t]);
        }
    }
    if (max_finite < 0.0)
        throw ContractError("network has no connected pairs");

    double total = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            double d = result.distances[i * p + j];
            if (!std::isfinite(d)) {
                d = max_finite;
                result.distances[i * p + j] = d;
                result.distances[j * p + i] = d;
                ++result.disconnected_pairs;
            }
            total += d;
        }
    }
    if (result.disconnected_pairs > 0) result.replacement_value = max_finite;
    result.aspl = total / (0.5 * static_cast<double>(p) * static_cast<double>(p - 1));
    return result;
}

// Z-scores with the sample (n-1) standard deviation, order preserved.
inline std::vector<double> standardize(const std::vector<double>& values) {
    if (values.size() < 2)
        throw ContractError("standardize: need at least 2 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    if (sd == 0.0)
        throw ContractError("standardize: zero standard deviation");
    std::vector<double> z;
    z.reserve(values.size());
    for (double v : values) z.push_back((v - mean) / sd);
    return z;
}

} // namespace attnet
