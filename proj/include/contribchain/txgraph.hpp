#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "contribchain/address.hpp"
#include "contribchain/types.hpp"

namespace contribchain {

/// Undirected weighted account graph over a trace window. Vertices are
/// indexed in ascending address order; that order anchors every
/// deterministic tie-break downstream. Self-payments carry no edge and
/// show up in vertex_load only.
struct TransactionGraph {
    std::vector<Address> vertices; // ascending
    std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>> adjacency;
    std::vector<std::uint64_t> vertex_load; // incident tx count, self-payments included
    std::uint64_t total_edge_weight = 0;    // each undirected edge once
    std::uint64_t self_payments = 0;

    std::size_t size() const { return vertices.size(); }

    std::optional<std::uint32_t> index_of(const Address& a) const {
        auto it = std::lower_bound(vertices.begin(), vertices.end(), a);
        if (it == vertices.end() || *it != a)
            return std::nullopt;
        return static_cast<std::uint32_t>(it - vertices.begin());
    }

    std::uint64_t edge_weight(std::uint32_t u, std::uint32_t v) const {
        for (const auto& [neighbor, weight] : adjacency[u])
            if (neighbor == v)
                return weight;
        return 0;
    }

    /// Weighted degree: sum of incident edge weights (self-payments excluded).
    std::uint64_t weighted_degree(std::uint32_t v) const {
        std::uint64_t total = 0;
        for (const auto& [neighbor, weight] : adjacency[v])
            total += weight;
        return total;
    }
};

inline TransactionGraph build_graph(std::span<const std::pair<Address, Address>> endpoints) {
    std::map<Address, std::uint64_t> loads;
    std::map<std::pair<Address, Address>, std::uint64_t> weights;
    std::uint64_t self_payments = 0;
    for (const auto& [from, to] : endpoints) {
        if (from == to) {
            ++loads[from];
            ++self_payments;
            continue;
        }
        ++loads[from];
        ++loads[to];
        auto key = from < to ? std::make_pair(from, to) : std::make_pair(to, from);
        ++weights[key];
    }

    TransactionGraph g;
    g.self_payments = self_payments;
    g.vertices.reserve(loads.size());
    for (const auto& [addr, load] : loads)
        g.vertices.push_back(addr);
    g.adjacency.resize(g.vertices.size());
    g.vertex_load.resize(g.vertices.size());
    for (const auto& [addr, load] : loads)
        g.vertex_load[*g.index_of(addr)] = load;
    for (const auto& [pair, weight] : weights) {
        const auto u = *g.index_of(pair.first);
        const auto v = *g.index_of(pair.second);
        g.adjacency[u].emplace_back(v, weight);
        g.adjacency[v].emplace_back(u, weight);
        g.total_edge_weight += weight;
    }
    return g;
}

inline TransactionGraph build_graph(std::span<const Transaction> txs) {
    std::vector<std::pair<Address, Address>> endpoints;
    endpoints.reserve(txs.size());
    for (const auto& tx : txs)
        endpoints.emplace_back(tx.from, tx.to);
    return build_graph(endpoints);
}

/// Load of one shard under the cross-shard weight model: intra-shard
/// edges cost their weight once; a cut edge costs beta/2 on each side.
inline std::vector<double> shard_loads(const TransactionGraph& g,
                                       std::span<const std::uint32_t> assignment, std::uint32_t k,
                                       double beta) {
    if (assignment.size() != g.size())
        throw std::invalid_argument("assignment must cover every vertex");
    std::vector<std::uint64_t> intra(k, 0), cut(k, 0);
    for (std::uint32_t u = 0; u < g.size(); ++u)
        for (const auto& [v, w] : g.adjacency[u]) {
            if (v < u)
                continue; // visit each edge once
            if (assignment[u] == assignment[v]) {
                intra[assignment[u]] += w;
            } else {
                cut[assignment[u]] += w;
                cut[assignment[v]] += w;
            }
        }
    std::vector<double> loads(k, 0.0);
    for (std::uint32_t s = 0; s < k; ++s)
        loads[s] = static_cast<double>(intra[s]) + beta / 2.0 * static_cast<double>(cut[s]);
    return loads;
}

// ---------------------------------------------------------------------------
// CSV interfaces: edge lists `from_hex,to_hex,weight` and assignments
// `address,shard_index`.

inline TransactionGraph load_graph_csv(std::istream& in) {
    std::vector<std::pair<Address, Address>> endpoints;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("graph csv line " + std::to_string(line_no) +
                                     ": expected from,to,weight");
        const auto from = Address::parse_hex(line.substr(0, c1));
        const auto to = Address::parse_hex(line.substr(c1 + 1, c2 - c1 - 1));
        const auto weight = std::stoull(line.substr(c2 + 1));
        for (std::uint64_t i = 0; i < weight; ++i)
            endpoints.emplace_back(from, to);
    }
    return build_graph(endpoints);
}

inline void dump_graph_csv(std::ostream& out, const TransactionGraph& g) {
    for (std::uint32_t u = 0; u < g.size(); ++u)
        for (const auto& [v, w] : g.adjacency[u]) {
            if (v < u)
                continue;
            out << g.vertices[u].to_hex() << "," << g.vertices[v].to_hex() << "," << w << "\n";
        }
}

inline void dump_assignment_csv(std::ostream& out, const TransactionGraph& g,
                                std::span<const std::uint32_t> assignment) {
    for (std::uint32_t v = 0; v < g.size(); ++v)
        out << g.vertices[v].to_hex() << "," << assignment[v] << "\n";
}

} // namespace contribchain
