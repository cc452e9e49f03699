#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "contribchain/address.hpp"
#include "contribchain/contribution.hpp"
#include "contribchain/rng.hpp"
#include "contribchain/types.hpp"

namespace contribchain {

struct NodeShardMapping {
    std::map<Address, ShardRef> assignment;
    std::uint64_t epoch = 0;

    std::vector<std::vector<Address>> members_by_shard(std::uint32_t k) const {
        std::vector<std::vector<Address>> out(k);
        for (const auto& [addr, shard] : assignment)
            if (!shard.is_a_shard()) {
                if (shard.index >= k)
                    throw std::invalid_argument("mapping references shard beyond K");
                out[shard.index].push_back(addr); // map order keeps these ascending
            }
        return out;
    }

    bool operator==(const NodeShardMapping&) const = default;
};

struct NacvThresholds {
    std::uint32_t i_thre = 50;
    double var_thre_s = 0.01;
    double var_thre_t = 0.25;

    void validate() const {
        if (i_thre == 0 || var_thre_s <= 0.0 || var_thre_t <= 0.0)
            throw std::invalid_argument("NACV thresholds must be positive");
    }
};

// ---------------------------------------------------------------------------
// Interval-based A-Shard selection (epoch identity draw decides membership)

struct AShardSelection {
    std::vector<Address> a_shard;
    std::vector<std::vector<Address>> w_by_interval; // initial W-Shard layout, K lists
};

/// Splits the identity space into K+1 equal intervals; the last interval
/// forms the A-Shard and the first K seed the W-Shards.
inline AShardSelection a_shard_select(const std::vector<Address>& identities, std::uint32_t k) {
    if (k == 0)
        throw std::invalid_argument("K must be positive");
    if (identities.empty())
        throw std::invalid_argument("no identities to select from");
    AShardSelection out;
    out.w_by_interval.resize(k);
    for (const auto& id : identities) {
        const auto interval = id.interval_index(k + 1);
        if (interval == k)
            out.a_shard.push_back(id);
        else
            out.w_by_interval[interval].push_back(id);
    }
    if (out.a_shard.empty())
        throw std::runtime_error("A-Shard empty");
    return out;
}

// ---------------------------------------------------------------------------
// Shard statistics

struct ShardStats {
    std::vector<double> security;    // s(S): mean member security
    std::vector<double> performance; // p(S): summed member performance
    std::vector<double> workload;    // W(S)
    std::vector<double> time;        // t(S) = W(S)/p(S)

    static double variance(const std::vector<double>& xs) {
        if (xs.empty())
            return 0.0;
        double mean = 0.0;
        for (double x : xs)
            mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs)
            var += (x - mean) * (x - mean);
        return var / static_cast<double>(xs.size());
    }

    double security_variance() const { return variance(security); }
    double time_variance() const { return variance(time); }
};

inline ShardStats shard_stats(const NodeShardMapping& mapping,
                              const std::map<Address, Contribution>& contributions,
                              const std::vector<double>& workloads, std::uint32_t k) {
    const auto members = mapping.members_by_shard(k);
    if (workloads.size() != k)
        throw std::invalid_argument("need one workload per shard");
    ShardStats stats;
    stats.security.resize(k);
    stats.performance.resize(k);
    stats.workload = workloads;
    stats.time.resize(k);
    for (std::uint32_t s = 0; s < k; ++s) {
        if (members[s].empty())
            throw std::runtime_error("empty shard " + std::to_string(s));
        double sec = 0.0, perf = 0.0;
        for (const auto& addr : members[s]) {
            auto it = contributions.find(addr);
            if (it == contributions.end())
                throw std::invalid_argument("node without contribution values: " + addr.to_hex());
            sec += it->second.security;
            perf += it->second.performance;
        }
        stats.security[s] = sec / static_cast<double>(members[s].size());
        stats.performance[s] = perf;
        if (perf <= 0.0) {
            warn("shard " + std::to_string(s) + " has non-positive performance; time set to +inf");
            stats.time[s] = std::numeric_limits<double>::infinity();
        } else {
            stats.time[s] = workloads[s] / perf;
        }
    }
    return stats;
}

/// Arithmetic means over the whole population: A-Shard nodes count toward
/// security but carry no meaningful performance value.
struct GlobalAverages {
    double security = 0.0;
    double performance = 0.0;
};

inline GlobalAverages global_averages(const NodeShardMapping& mapping,
                                      const std::map<Address, Contribution>& contributions) {
    double sec = 0.0, perf = 0.0;
    std::size_t sec_count = 0, perf_count = 0;
    for (const auto& [addr, shard] : mapping.assignment) {
        auto it = contributions.find(addr);
        if (it == contributions.end())
            continue; // new node, no values yet
        sec += it->second.security;
        ++sec_count;
        if (!shard.is_a_shard()) {
            perf += it->second.performance;
            ++perf_count;
        }
    }
    GlobalAverages out;
    if (sec_count)
        out.security = sec / static_cast<double>(sec_count);
    if (perf_count)
        out.performance = perf / static_cast<double>(perf_count);
    return out;
}

namespace nacv_detail {

inline std::uint32_t argmin_shard(const std::vector<double>& xs) {
    std::uint32_t best = 0;
    for (std::uint32_t s = 1; s < xs.size(); ++s)
        if (xs[s] < xs[best])
            best = s;
    return best;
}

inline std::uint32_t argmax_shard(const std::vector<double>& xs) {
    std::uint32_t best = 0;
    for (std::uint32_t s = 1; s < xs.size(); ++s)
        if (xs[s] > xs[best])
            best = s;
    return best;
}

/// Candidate pick per the published scheme: sort the eligible set
/// ascending by address, index it with the generator's next draw.
inline std::optional<Address> pick(DetRng& rng, const std::vector<Address>& sorted_set) {
    if (sorted_set.empty())
        return std::nullopt;
    return sorted_set[rng.bounded(sorted_set.size())];
}

} // namespace nacv_detail

/// Step 2: nodes absent from the previous epoch (fresh joins or A-Shard
/// returners) get placed one at a time; brand-new nodes first receive the
/// population-average contribution values.
inline void place_new_nodes(NodeShardMapping& mapping, const std::vector<Address>& new_nodes,
                            std::map<Address, Contribution>& contributions,
                            const std::vector<double>& workloads, std::uint32_t k) {
    auto sorted = new_nodes;
    std::sort(sorted.begin(), sorted.end());
    // averages are fixed at epoch start; placements do not shift them
    const auto averages = global_averages(mapping, contributions);
    for (const auto& addr : sorted) {
        if (!contributions.count(addr))
            contributions[addr] = Contribution{averages.security, averages.performance};
        const auto stats = shard_stats(mapping, contributions, workloads, k);
        const auto& c = contributions.at(addr);
        std::uint32_t target;
        if (c.security >= averages.security)
            target = nacv_detail::argmin_shard(stats.security);
        else if (c.performance >= averages.performance)
            target = nacv_detail::argmax_shard(stats.time);
        else
            target = nacv_detail::argmax_shard(stats.security);
        mapping.assignment[addr] = ShardRef::w_shard(target);
    }
}

struct SecurityAdjustResult {
    NodeShardMapping mapping; // best seen
    double variance = 0.0;    // Var(s(S)) of `mapping`
    std::uint32_t iterations = 0;
};

/// Step 3: swap low-security nodes out of the least secure shard against
/// high-security nodes from the most secure one, tracking the best
/// variance seen. Iterations without a valid pair still count.
inline SecurityAdjustResult security_adjust(const NodeShardMapping& input,
                                            const std::map<Address, Contribution>& contributions,
                                            const std::vector<double>& workloads,
                                            const NacvThresholds& thresholds, std::uint32_t k,
                                            DetRng& rng) {
    thresholds.validate();
    NodeShardMapping working = input;
    auto stats = shard_stats(working, contributions, workloads, k);
    const auto averages = global_averages(working, contributions);

    SecurityAdjustResult result;
    result.mapping = working;
    result.variance = stats.security_variance();

    while (result.variance > thresholds.var_thre_s && result.iterations < thresholds.i_thre) {
        const auto min_shard = nacv_detail::argmin_shard(stats.security);
        const auto max_shard = nacv_detail::argmax_shard(stats.security);
        const auto members = working.members_by_shard(k);

        std::vector<Address> low_candidates, high_candidates;
        for (const auto& addr : members[min_shard])
            if (contributions.at(addr).security <= averages.security)
                low_candidates.push_back(addr);
        for (const auto& addr : members[max_shard])
            if (contributions.at(addr).security >= averages.security)
                high_candidates.push_back(addr);

        ++result.iterations;
        if (min_shard == max_shard)
            continue;
        const auto low = nacv_detail::pick(rng, low_candidates);
        if (!low)
            continue;
        const auto high = nacv_detail::pick(rng, high_candidates);
        if (!high)
            continue;

        std::swap(working.assignment[*low], working.assignment[*high]);
        stats = shard_stats(working, contributions, workloads, k);
        const double variance = stats.security_variance();
        if (variance < result.variance) {
            result.variance = variance;
            result.mapping = working;
        }
    }
    return result;
}

struct PerformanceAdjustResult {
    NodeShardMapping mapping; // best seen that respects the security gate
    double time_variance = 0.0;
    bool aborted = false; // no swappable pair at any tier: fall back to account allocation
    std::uint32_t iterations = 0;
};

/// Step 4: move processing power toward the slowest shard through the
/// three-tier candidate search. A swap enters the result only if it
/// improves Var(t(S)) while keeping Var(s(S)) under the security gate.
inline PerformanceAdjustResult performance_adjust(const NodeShardMapping& input,
                                                  const std::map<Address, Contribution>& contributions,
                                                  const std::vector<double>& workloads,
                                                  const NacvThresholds& thresholds, std::uint32_t k,
                                                  DetRng& rng) {
    thresholds.validate();
    NodeShardMapping working = input;
    auto stats = shard_stats(working, contributions, workloads, k);
    const auto averages = global_averages(working, contributions);

    PerformanceAdjustResult result;
    result.mapping = working;
    result.time_variance = stats.time_variance();

    while (result.time_variance > thresholds.var_thre_t && result.iterations < thresholds.i_thre) {
        const auto fast_shard = nacv_detail::argmin_shard(stats.time);
        const auto slow_shard = nacv_detail::argmax_shard(stats.time);
        if (fast_shard == slow_shard) {
            result.aborted = true;
            break;
        }
        const auto members = working.members_by_shard(k);
        const auto perf_of = [&](const Address& a) { return contributions.at(a).performance; };

        std::optional<Address> strong, weak;

        // tier 1: above-average power in the fast shard, below-average in
        // the slow one
        {
            std::vector<Address> strong_set, weak_set;
            for (const auto& addr : members[fast_shard])
                if (perf_of(addr) >= averages.performance)
                    strong_set.push_back(addr);
            for (const auto& addr : members[slow_shard])
                if (perf_of(addr) <= averages.performance)
                    weak_set.push_back(addr);
            strong = nacv_detail::pick(rng, strong_set);
            if (strong)
                weak = nacv_detail::pick(rng, weak_set);
        }
        // tier 2: strongest node of the fast shard against any weaker
        // node in the slow shard
        if (!strong || !weak) {
            std::optional<Address> best;
            for (const auto& addr : members[fast_shard])
                if (!best || perf_of(addr) > perf_of(*best))
                    best = addr;
            std::vector<Address> weak_set;
            for (const auto& addr : members[slow_shard])
                if (best && perf_of(addr) < perf_of(*best))
                    weak_set.push_back(addr);
            weak = nacv_detail::pick(rng, weak_set);
            strong = weak ? best : std::nullopt;
        }
        // tier 3: strongest node outside the slow shard
        if (!strong || !weak) {
            std::optional<Address> best;
            for (std::uint32_t s = 0; s < k; ++s) {
                if (s == slow_shard)
                    continue;
                for (const auto& addr : members[s])
                    if (!best || perf_of(addr) > perf_of(*best))
                        best = addr;
            }
            std::vector<Address> weak_set;
            for (const auto& addr : members[slow_shard])
                if (best && perf_of(addr) < perf_of(*best))
                    weak_set.push_back(addr);
            weak = nacv_detail::pick(rng, weak_set);
            strong = weak ? best : std::nullopt;
        }

        if (!strong || !weak) {
            result.aborted = true;
            break;
        }

        std::swap(working.assignment[*strong], working.assignment[*weak]);
        ++result.iterations;
        stats = shard_stats(working, contributions, workloads, k);
        const double time_variance = stats.time_variance();
        const double security_variance = stats.security_variance();
        // the working state keeps the swap either way (same exploration
        // pattern as the security step); only gated improvements land in
        // the result
        if (time_variance < result.time_variance && security_variance < thresholds.var_thre_s) {
            result.time_variance = time_variance;
            result.mapping = working;
        }
    }
    return result;
}

struct NacvResult {
    NodeShardMapping mapping;
    bool aborted = false; // caller should trigger account allocation
    double security_variance = 0.0;
    double time_variance = 0.0;
};

/// Full node allocation: stats, new-node placement, security adjustment,
/// performance adjustment. A-Shard entries pass through untouched.
inline NacvResult nacv(const NodeShardMapping& input,
                       std::map<Address, Contribution>& contributions,
                       const std::vector<Address>& new_nodes, const std::vector<double>& workloads,
                       const NacvThresholds& thresholds, std::uint32_t k, std::uint64_t seed) {
    DetRng rng(DetRng::derive(seed, rng_tag::nacv, input.epoch));
    NodeShardMapping working = input;
    place_new_nodes(working, new_nodes, contributions, workloads, k);
    auto security = security_adjust(working, contributions, workloads, thresholds, k, rng);
    auto performance =
        performance_adjust(security.mapping, contributions, workloads, thresholds, k, rng);

    NacvResult result;
    result.mapping = std::move(performance.mapping);
    result.mapping.epoch = input.epoch;
    result.aborted = performance.aborted;
    result.time_variance = performance.time_variance;
    result.security_variance =
        shard_stats(result.mapping, contributions, workloads, k).security_variance();
    return result;
}

// ---------------------------------------------------------------------------
// CSV interface: `node_address,shard_index` with `a` for the A-Shard.

inline void dump_mapping_csv(std::ostream& out, const NodeShardMapping& mapping) {
    for (const auto& [addr, shard] : mapping.assignment) {
        out << addr.to_hex() << ",";
        if (shard.is_a_shard())
            out << "a";
        else
            out << shard.index;
        out << "\n";
    }
}

inline NodeShardMapping load_mapping_csv(std::istream& in) {
    NodeShardMapping mapping;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("mapping csv line " + std::to_string(line_no) +
                                     ": expected address,shard");
        const auto addr = Address::parse_hex(line.substr(0, comma));
        const auto shard_text = line.substr(comma + 1);
        mapping.assignment[addr] = shard_text == "a"
                                       ? ShardRef::a_shard()
                                       : ShardRef::w_shard(static_cast<std::uint32_t>(
                                             std::stoul(shard_text)));
    }
    return mapping;
}

} // namespace contribchain
