#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "contribchain/txgraph.hpp"

namespace contribchain {

// ---------------------------------------------------------------------------
// Louvain community detection (weighted modularity, resolution 1). All
// iteration orders are fixed by vertex index, so a given graph always
// yields the same communities.

namespace louvain_detail {

struct LevelGraph {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency; // no self loops
    std::vector<double> self_loop; // w(v,v), each counted once
    std::vector<double> degree;    // k_v = sum of incident weights + 2*self_loop
    double m2 = 0.0;               // sum of degrees

    std::size_t size() const { return degree.size(); }
};

inline LevelGraph from_transaction_graph(const TransactionGraph& g) {
    LevelGraph lg;
    lg.adjacency.resize(g.size());
    lg.self_loop.assign(g.size(), 0.0);
    lg.degree.assign(g.size(), 0.0);
    for (std::uint32_t u = 0; u < g.size(); ++u) {
        for (const auto& [v, w] : g.adjacency[u]) {
            lg.adjacency[u].emplace_back(v, static_cast<double>(w));
            lg.degree[u] += static_cast<double>(w);
        }
        lg.m2 += lg.degree[u];
    }
    return lg;
}

/// One round of local moves until a full sweep changes nothing. Returns
/// whether any vertex moved. `community` is updated in place.
inline bool local_phase(const LevelGraph& g, std::vector<std::uint32_t>& community) {
    std::vector<double> community_total(g.size(), 0.0);
    for (std::uint32_t v = 0; v < g.size(); ++v)
        community_total[community[v]] += g.degree[v];

    bool any_move = false;
    bool moved = true;
    while (moved) {
        moved = false;
        for (std::uint32_t v = 0; v < g.size(); ++v) {
            const std::uint32_t old = community[v];
            community_total[old] -= g.degree[v];

            std::map<std::uint32_t, double> link; // community -> weight from v
            for (const auto& [u, w] : g.adjacency[v])
                link[community[u]] += w;

            std::uint32_t best = old;
            double best_gain = link.count(old) ? link[old] - g.degree[v] * community_total[old] / g.m2
                                               : -g.degree[v] * community_total[old] / g.m2;
            for (const auto& [c, w] : link) {
                if (c == old)
                    continue;
                const double gain = w - g.degree[v] * community_total[c] / g.m2;
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best = c;
                }
            }
            community[v] = best;
            community_total[best] += g.degree[v];
            if (best != old) {
                moved = true;
                any_move = true;
            }
        }
    }
    return any_move;
}

/// Renumbers communities densely in order of first appearance and builds
/// the aggregated graph whose vertices are communities.
inline LevelGraph aggregate(const LevelGraph& g, std::vector<std::uint32_t>& community) {
    std::vector<std::uint32_t> renumber(g.size(), std::numeric_limits<std::uint32_t>::max());
    std::uint32_t next = 0;
    for (std::uint32_t v = 0; v < g.size(); ++v) {
        if (renumber[community[v]] == std::numeric_limits<std::uint32_t>::max())
            renumber[community[v]] = next++;
        community[v] = renumber[community[v]];
    }

    LevelGraph out;
    out.adjacency.resize(next);
    out.self_loop.assign(next, 0.0);
    out.degree.assign(next, 0.0);
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> edges;
    for (std::uint32_t v = 0; v < g.size(); ++v) {
        out.self_loop[community[v]] += g.self_loop[v];
        for (const auto& [u, w] : g.adjacency[v]) {
            if (u < v)
                continue;
            const auto cv = community[v], cu = community[u];
            if (cv == cu)
                out.self_loop[cv] += w;
            else
                edges[{std::min(cv, cu), std::max(cv, cu)}] += w;
        }
    }
    for (const auto& [pair, w] : edges) {
        out.adjacency[pair.first].emplace_back(pair.second, w);
        out.adjacency[pair.second].emplace_back(pair.first, w);
    }
    for (std::uint32_t v = 0; v < next; ++v) {
        for (const auto& [u, w] : out.adjacency[v])
            out.degree[v] += w;
        out.degree[v] += 2.0 * out.self_loop[v];
        out.m2 += out.degree[v];
    }
    return out;
}

} // namespace louvain_detail

/// Communities as lists of vertex indexes, each sorted ascending, ordered
/// by smallest member. Isolated vertices come out as singletons.
inline std::vector<std::vector<std::uint32_t>> louvain_communities(const TransactionGraph& g) {
    std::vector<std::uint32_t> membership(g.size());
    for (std::uint32_t v = 0; v < g.size(); ++v)
        membership[v] = v;

    if (g.total_edge_weight > 0) {
        auto level = louvain_detail::from_transaction_graph(g);
        std::vector<std::uint32_t> local(level.size());
        for (std::uint32_t v = 0; v < level.size(); ++v)
            local[v] = v;
        while (louvain_detail::local_phase(level, local)) {
            level = louvain_detail::aggregate(level, local);
            for (auto& m : membership)
                m = local[m];
            local.assign(level.size(), 0);
            for (std::uint32_t v = 0; v < level.size(); ++v)
                local[v] = v;
        }
    }

    // group by community, order communities by smallest member
    std::map<std::uint32_t, std::vector<std::uint32_t>> grouped;
    for (std::uint32_t v = 0; v < membership.size(); ++v)
        grouped[membership[v]].push_back(v);
    std::map<std::uint32_t, std::vector<std::uint32_t>> by_least;
    for (auto& [id, members] : grouped)
        by_least[members.front()] = std::move(members);
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(by_least.size());
    for (auto& [least, members] : by_least)
        out.push_back(std::move(members));
    return out;
}

inline std::vector<std::vector<Address>> louvain(const TransactionGraph& g) {
    std::vector<std::vector<Address>> out;
    for (const auto& community : louvain_communities(g)) {
        std::vector<Address> addrs;
        addrs.reserve(community.size());
        for (auto v : community)
            addrs.push_back(g.vertices[v]);
        out.push_back(std::move(addrs));
    }
    return out;
}

/// Weighted modularity of a vertex->community assignment. Exposed for the
/// brute-force cross-checks in the test suite.
inline double modularity(const TransactionGraph& g, std::span<const std::uint32_t> community) {
    if (g.total_edge_weight == 0)
        return 0.0;
    const double m = static_cast<double>(g.total_edge_weight);
    std::map<std::uint32_t, double> in, tot;
    for (std::uint32_t v = 0; v < g.size(); ++v)
        tot[community[v]] += static_cast<double>(g.weighted_degree(v));
    for (std::uint32_t u = 0; u < g.size(); ++u)
        for (const auto& [v, w] : g.adjacency[u]) {
            if (v < u)
                continue;
            if (community[u] == community[v])
                in[community[u]] += static_cast<double>(w);
        }
    double q = 0.0;
    for (const auto& [c, t] : tot) {
        const double inside = in.count(c) ? in[c] : 0.0;
        q += inside / m - (t / (2.0 * m)) * (t / (2.0 * m));
    }
    return q;
}

// ---------------------------------------------------------------------------
// Account partition: K shards with performance values; processing time of
// a shard is its load (cross-shard weight model) over its performance.

struct AccountPartition {
    std::vector<std::uint32_t> assignment; // vertex index -> shard
    std::vector<double> perf;              // p_k, all positive
    std::vector<std::uint64_t> intra;      // intra-shard edge weight per shard
    std::vector<std::uint64_t> cut;        // cut edge weight incident per shard
    double beta = 2.0;

    std::uint32_t shard_count() const { return static_cast<std::uint32_t>(perf.size()); }

    double load(std::uint32_t s) const {
        return static_cast<double>(intra[s]) + beta / 2.0 * static_cast<double>(cut[s]);
    }

    double time(std::uint32_t s) const { return load(s) / perf[s]; }

    double max_time() const {
        double best = 0.0;
        for (std::uint32_t s = 0; s < shard_count(); ++s)
            best = std::max(best, time(s));
        return best;
    }

    std::vector<double> times() const {
        std::vector<double> out(shard_count());
        for (std::uint32_t s = 0; s < shard_count(); ++s)
            out[s] = time(s);
        return out;
    }

    std::vector<std::vector<Address>> shard_accounts(const TransactionGraph& g) const {
        std::vector<std::vector<Address>> out(shard_count());
        for (std::uint32_t v = 0; v < assignment.size(); ++v)
            out[assignment[v]].push_back(g.vertices[v]);
        return out;
    }

    std::map<Address, ShardRef> as_shard_map(const TransactionGraph& g) const {
        std::map<Address, ShardRef> out;
        for (std::uint32_t v = 0; v < assignment.size(); ++v)
            out[g.vertices[v]] = ShardRef::w_shard(assignment[v]);
        return out;
    }
};

inline AccountPartition partition_from_assignment(const TransactionGraph& g,
                                                  std::vector<std::uint32_t> assignment,
                                                  std::vector<double> perf, double beta) {
    AccountPartition p;
    p.perf = std::move(perf);
    p.beta = beta;
    for (double v : p.perf)
        if (v <= 0.0)
            throw std::invalid_argument("shard performance values must be positive");
    p.assignment = std::move(assignment);
    p.intra.assign(p.perf.size(), 0);
    p.cut.assign(p.perf.size(), 0);
    if (p.assignment.size() != g.size())
        throw std::invalid_argument("assignment must cover every vertex");
    for (std::uint32_t u = 0; u < g.size(); ++u) {
        if (p.assignment[u] >= p.perf.size())
            throw std::invalid_argument("assignment references an unknown shard");
        for (const auto& [v, w] : g.adjacency[u]) {
            if (v < u)
                continue;
            if (p.assignment[u] == p.assignment[v]) {
                p.intra[p.assignment[u]] += w;
            } else {
                p.cut[p.assignment[u]] += w;
                p.cut[p.assignment[v]] += w;
            }
        }
    }
    return p;
}

namespace plouvain_detail {

/// v's edge weight into each shard plus its weighted degree.
inline std::pair<std::vector<std::uint64_t>, std::uint64_t>
weights_by_shard(const TransactionGraph& g, const AccountPartition& p, std::uint32_t v) {
    std::vector<std::uint64_t> ws(p.shard_count(), 0);
    std::uint64_t degree = 0;
    for (const auto& [u, w] : g.adjacency[v]) {
        ws[p.assignment[u]] += w;
        degree += w;
    }
    return {std::move(ws), degree};
}

inline void apply_move(AccountPartition& p, std::uint32_t v,
                       const std::vector<std::uint64_t>& ws, std::uint64_t degree,
                       std::uint32_t to) {
    const std::uint32_t from = p.assignment[v];
    p.intra[from] -= ws[from];
    p.cut[from] = static_cast<std::uint64_t>(
        static_cast<std::int64_t>(p.cut[from]) + 2 * static_cast<std::int64_t>(ws[from]) -
        static_cast<std::int64_t>(degree));
    p.intra[to] += ws[to];
    p.cut[to] = static_cast<std::uint64_t>(
        static_cast<std::int64_t>(p.cut[to]) + static_cast<std::int64_t>(degree) -
        2 * static_cast<std::int64_t>(ws[to]));
    p.assignment[v] = to;
}

/// Reduction of max(t_from, t_to) if v moved to `to`; positive is better.
inline double move_reduction(const AccountPartition& p, std::uint32_t v,
                             const std::vector<std::uint64_t>& ws, std::uint64_t degree,
                             std::uint32_t to) {
    const std::uint32_t from = p.assignment[v];
    const double load_from_after =
        static_cast<double>(p.intra[from] - ws[from]) +
        p.beta / 2.0 *
            static_cast<double>(static_cast<std::int64_t>(p.cut[from]) +
                                2 * static_cast<std::int64_t>(ws[from]) -
                                static_cast<std::int64_t>(degree));
    const double load_to_after =
        static_cast<double>(p.intra[to] + ws[to]) +
        p.beta / 2.0 *
            static_cast<double>(static_cast<std::int64_t>(p.cut[to]) +
                                static_cast<std::int64_t>(degree) -
                                2 * static_cast<std::int64_t>(ws[to]));
    const double before = std::max(p.time(from), p.time(to));
    const double after = std::max(load_from_after / p.perf[from], load_to_after / p.perf[to]);
    return before - after;
}

/// Best improving neighbor-shard move for v, if any.
struct Candidate {
    std::uint32_t shard = 0;
    double reduction = 0.0;
    bool found = false;
};

inline Candidate best_move(const TransactionGraph& g, const AccountPartition& p, std::uint32_t v) {
    Candidate best;
    const auto [ws, degree] = weights_by_shard(g, p, v);
    const std::uint32_t from = p.assignment[v];
    for (std::uint32_t s = 0; s < p.shard_count(); ++s) {
        if (s == from || ws[s] == 0)
            continue; // only shards hosting a neighbor are candidates
        const double reduction = move_reduction(p, v, ws, degree, s);
        if (reduction > best.reduction) { // strict: zero-gain moves are not taken
            best.reduction = reduction;
            best.shard = s;
            best.found = true;
        }
    }
    return best;
}

} // namespace plouvain_detail

/// Pads the community list with empty communities up to K. Splitting a
/// community to fill shards would force cut edges that the account
/// movement phase can never heal (an empty shard hosts no neighbors), so
/// a lone community stays whole and spare shards idle.
inline std::vector<std::vector<std::uint32_t>>
normalize_communities(const TransactionGraph&, std::vector<std::vector<std::uint32_t>> communities,
                      std::uint32_t k) {
    while (communities.size() < k)
        communities.emplace_back();
    return communities;
}

/// Community movement: heaviest communities pair with the
/// highest-performance shards, the rest chase the minimum processing time.
inline AccountPartition community_movement(const TransactionGraph& g,
                                           std::vector<std::vector<std::uint32_t>> communities,
                                           std::vector<double> perf, double beta) {
    const auto k = static_cast<std::uint32_t>(perf.size());
    if (k == 0)
        throw std::invalid_argument("need at least one shard");
    for (double v : perf)
        if (v <= 0.0)
            throw std::invalid_argument("shard performance values must be positive");
    communities = normalize_communities(g, std::move(communities), k);

    // order communities by total vertex load descending (ties: first come)
    std::vector<std::size_t> community_order(communities.size());
    std::vector<std::uint64_t> loads(communities.size(), 0);
    for (std::size_t i = 0; i < communities.size(); ++i) {
        community_order[i] = i;
        for (auto v : communities[i])
            loads[i] += g.vertex_load[v];
    }
    std::stable_sort(community_order.begin(), community_order.end(),
                     [&](std::size_t a, std::size_t b) { return loads[a] > loads[b]; });

    // order shards by performance descending (ties: lower index)
    std::vector<std::uint32_t> shard_order(k);
    for (std::uint32_t s = 0; s < k; ++s)
        shard_order[s] = s;
    std::stable_sort(shard_order.begin(), shard_order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return perf[a] > perf[b]; });

    AccountPartition p;
    p.perf = std::move(perf);
    p.beta = beta;
    p.assignment.assign(g.size(), std::numeric_limits<std::uint32_t>::max());
    p.intra.assign(k, 0);
    p.cut.assign(k, 0);

    // incremental load bookkeeping: an edge lands when its second
    // endpoint gets a shard
    auto place = [&](const std::vector<std::uint32_t>& community, std::uint32_t shard) {
        for (auto v : community) {
            p.assignment[v] = shard;
            for (const auto& [u, w] : g.adjacency[v]) {
                if (p.assignment[u] == std::numeric_limits<std::uint32_t>::max())
                    continue;
                if (p.assignment[u] == shard) {
                    p.intra[shard] += w;
                } else {
                    p.cut[shard] += w;
                    p.cut[p.assignment[u]] += w;
                }
            }
        }
    };

    for (std::uint32_t i = 0; i < k && i < community_order.size(); ++i)
        place(communities[community_order[i]], shard_order[i]);
    for (std::size_t i = k; i < community_order.size(); ++i) {
        std::uint32_t target = 0;
        for (std::uint32_t s = 1; s < k; ++s)
            if (p.time(s) < p.time(target))
                target = s;
        place(communities[community_order[i]], target);
    }
    return p;
}

struct AccountMove {
    std::uint32_t vertex;
    std::uint32_t from;
    std::uint32_t to;
    double max_time_after;
};

/// Single-account refinement over a needCheck worklist. Each accepted
/// move strictly reduces the max of the two touched shard times, leaving
/// every other shard's time unchanged, so the global maximum never rises.
/// Runs to a global fixed point: on drain, a verification scan reflags
/// any remaining improvable boundary account.
inline std::vector<AccountMove> account_movement(const TransactionGraph& g, AccountPartition& p) {
    std::vector<AccountMove> log;
    std::deque<std::uint32_t> queue;
    std::vector<char> flagged(g.size(), 1);
    for (std::uint32_t v = 0; v < g.size(); ++v)
        queue.push_back(v);

    auto enqueue = [&](std::uint32_t v) {
        if (!flagged[v]) {
            flagged[v] = 1;
            queue.push_back(v);
        }
    };

    for (;;) {
        while (!queue.empty()) {
            const std::uint32_t v = queue.front();
            queue.pop_front();
            if (!flagged[v])
                continue;
            flagged[v] = 0;
            const auto best = plouvain_detail::best_move(g, p, v);
            if (!best.found)
                continue;
            const auto [ws, degree] = plouvain_detail::weights_by_shard(g, p, v);
            const std::uint32_t from = p.assignment[v];
            plouvain_detail::apply_move(p, v, ws, degree, best.shard);
            log.push_back({v, from, best.shard, p.max_time()});
            for (const auto& [u, w] : g.adjacency[v])
                enqueue(u);
        }
        // closure scan: a move elsewhere may have opened an improvement
        // for an account the neighbor re-flagging missed
        bool found = false;
        for (std::uint32_t v = 0; v < g.size() && !found; ++v)
            if (plouvain_detail::best_move(g, p, v).found) {
                enqueue(v);
                found = true;
            }
        if (!found)
            return log;
    }
}

/// Accepts iff no single boundary account can move to a neighbor shard
/// and strictly reduce the max of the two affected processing times.
/// Returns the first witness in vertex order otherwise.
inline std::optional<Address> verify_allocation(const TransactionGraph& g,
                                                const AccountPartition& p) {
    if (p.assignment.size() != g.size())
        throw std::invalid_argument("partition does not cover the graph");
    for (std::uint32_t v = 0; v < g.size(); ++v)
        if (plouvain_detail::best_move(g, p, v).found)
            return g.vertices[v];
    return std::nullopt;
}

/// Full account allocation: Louvain communities, community-to-shard
/// matching by performance, then single-account refinement.
inline AccountPartition p_louvain(const TransactionGraph& g, std::uint32_t k,
                                  std::vector<double> perf, double beta,
                                  std::vector<AccountMove>* move_log = nullptr) {
    if (k == 0 || perf.size() != k)
        throw std::invalid_argument("need one performance value per shard");
    auto communities = louvain_communities(g);
    auto partition = community_movement(g, std::move(communities), std::move(perf), beta);
    auto log = account_movement(g, partition);
    if (move_log)
        *move_log = std::move(log);
    return partition;
}

} // namespace contribchain
