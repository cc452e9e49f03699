#pragma once

#include <cstdint>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "contribchain/address.hpp"
#include "contribchain/config.hpp"
#include "contribchain/types.hpp"

#include "json.hpp"

namespace contribchain {

inline void warn(const std::string& message) { std::cerr << "[warn] " << message << "\n"; }

struct NodeVote {
    bool correct = true; // e_ij
    bool leader = false;
};

/// Evidence from one consensus round: which block, how many transactions,
/// whether submission failed, and how every shard member behaved. On a
/// successful submission the correct behavior is a yes vote; on a failed
/// one it is a no vote.
struct BehaviorRecord {
    std::uint64_t block_id = 0;
    std::uint64_t tx_count = 0;
    bool failed = false; // delta_j
    std::map<Address, NodeVote> per_node;

    std::size_t total_nodes() const { return per_node.size(); }

    std::size_t correct_count() const {
        std::size_t n = 0;
        for (const auto& [addr, vote] : per_node)
            n += vote.correct ? 1 : 0;
        return n;
    }

    void validate() const {
        std::size_t leaders = 0;
        for (const auto& [addr, vote] : per_node)
            leaders += vote.leader ? 1 : 0;
        if (leaders != 1)
            throw std::invalid_argument("behavior record must have exactly one leader");
        const std::size_t correct = correct_count();
        if (correct == 0)
            throw std::invalid_argument("behavior record must have at least one correct node");
        if (failed && correct == total_nodes())
            throw std::invalid_argument("failed submission cannot have all nodes correct");
    }
};

struct RoleCounters {
    std::uint64_t leader_correct = 0;   // N_MR
    std::uint64_t leader_wrong = 0;     // N_MW
    std::uint64_t follower_correct = 0; // N_FR
    std::uint64_t follower_wrong = 0;   // N_FW

    bool empty() const {
        return leader_correct + leader_wrong + follower_correct + follower_wrong == 0;
    }

    bool operator==(const RoleCounters&) const = default;
};

struct ContributionLedger {
    std::uint64_t epoch = 0;
    double epoch_duration_s = 1.0; // t_e
    std::vector<BehaviorRecord> records;

    void append(BehaviorRecord record) {
        record.validate();
        records.push_back(std::move(record));
    }

    /// Tallies every node's per-role behavior counts from the records.
    std::map<Address, RoleCounters> role_counters() const {
        std::map<Address, RoleCounters> out;
        for (const auto& record : records) {
            for (const auto& [addr, vote] : record.per_node) {
                auto& c = out[addr];
                if (vote.leader)
                    (vote.correct ? c.leader_correct : c.leader_wrong)++;
                else
                    (vote.correct ? c.follower_correct : c.follower_wrong)++;
            }
        }
        return out;
    }

    void dump(std::ostream& out) const;
    static ContributionLedger load(std::istream& in);
};

/// Stage performance contribution of `node` over the epoch: credited an
/// equal split of each block it helped commit, debited an equal split of
/// each failed block it misjudged, all divided by the epoch duration.
inline double stage_performance(const ContributionLedger& ledger, const Address& node) {
    double sum = 0.0;
    for (const auto& record : ledger.records) {
        auto it = record.per_node.find(node);
        if (it == record.per_node.end())
            throw std::invalid_argument("node not in ledger");
        const double tx = static_cast<double>(record.tx_count);
        const std::size_t n = record.total_nodes();
        const std::size_t correct = record.correct_count();
        if (it->second.correct) {
            sum += tx / static_cast<double>(correct);
        } else if (record.failed) {
            if (correct == n) {
                // unreachable for records built here (correct==n forces
                // e_ij=1 for all), but external fixtures may disagree
                warn("failed record claims all nodes correct; penalty term dropped");
            } else {
                sum -= tx / static_cast<double>(n - correct);
            }
        }
    }
    return sum / ledger.epoch_duration_s;
}

/// Stage security contribution from role counters: a weighted average of
/// per-round scores (+mu for correct, -theta for wrong) where leader
/// rounds weigh lambda. Always lands in [-theta, mu].
inline double stage_security(const RoleCounters& c, double mu, double theta, double lambda) {
    const double weight = lambda * static_cast<double>(c.leader_correct + c.leader_wrong) +
                          static_cast<double>(c.follower_correct + c.follower_wrong);
    if (weight == 0.0)
        throw std::invalid_argument("no behavior evidence");
    const double reward = mu * (lambda * static_cast<double>(c.leader_correct) +
                                static_cast<double>(c.follower_correct));
    const double penalty = theta * (lambda * static_cast<double>(c.leader_wrong) +
                                    static_cast<double>(c.follower_wrong));
    return (reward - penalty) / weight;
}

inline double stage_security(const ContributionLedger& ledger, const Address& node, double mu,
                             double theta, double lambda) {
    auto counters = ledger.role_counters();
    auto it = counters.find(node);
    if (it == counters.end())
        throw std::invalid_argument("no behavior evidence");
    return stage_security(it->second, mu, theta, lambda);
}

/// Retention update folding a stage value into the global one.
inline double update_global(double prev, double stage, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("alpha must lie in [0,1]");
    return alpha * prev + (1.0 - alpha) * stage;
}

/// Wrong-behavior ratio above which a follower's stage security turns
/// negative.
inline double tolerance_threshold(double mu, double theta) {
    if (mu <= 0.0 || theta <= 0.0)
        throw std::invalid_argument("mu and theta must be positive");
    return mu / (mu + theta);
}

/// Shard TPS over the epoch: failed submissions contribute nothing.
inline double shard_epoch_tps(const ContributionLedger& ledger) {
    if (ledger.epoch_duration_s <= 0.0)
        throw std::invalid_argument("epoch duration must be positive");
    double total = 0.0;
    for (const auto& record : ledger.records)
        if (!record.failed)
            total += static_cast<double>(record.tx_count);
    return total / ledger.epoch_duration_s;
}

struct Contribution {
    double security = 0.0;
    double performance = 0.0;
};

/// Initial global contribution at genesis: the all-honest quorum level for
/// security, zero for performance.
inline Contribution genesis_contribution(const ExperimentConfig& cfg) {
    return Contribution{(2.0 * cfg.mu - cfg.theta) / 3.0, 0.0};
}

/// End-of-epoch fold: every node with evidence in some W-Shard ledger gets
/// stage values folded in; A-Shard members get the all-correct follower
/// security stage (they performed their allocation duty) and keep their
/// performance value; everyone else carries forward unchanged.
inline std::map<Address, Contribution>
update_epoch(const std::vector<ContributionLedger>& shard_ledgers,
             const std::map<Address, Contribution>& prev,
             const std::vector<Address>& a_shard_members, const ExperimentConfig& cfg) {
    std::map<Address, Contribution> next = prev;
    for (const auto& ledger : shard_ledgers) {
        auto counters = ledger.role_counters();
        for (const auto& [addr, c] : counters) {
            auto it = next.find(addr);
            if (it == next.end())
                throw std::invalid_argument("ledger mentions node without prior contribution: " +
                                            addr.to_hex());
            const double ds = stage_security(c, cfg.mu, cfg.theta, cfg.lambda);
            const double dp = stage_performance(ledger, addr);
            it->second.security = update_global(it->second.security, ds, cfg.alpha);
            it->second.performance = update_global(it->second.performance, dp, cfg.alpha);
        }
    }
    for (const auto& addr : a_shard_members) {
        auto it = next.find(addr);
        if (it == next.end())
            throw std::invalid_argument("A-Shard member without prior contribution: " +
                                        addr.to_hex());
        it->second.security = update_global(it->second.security, cfg.mu, cfg.alpha);
    }
    return next;
}

// ---------------------------------------------------------------------------
// Line-delimited record dumps, one JSON object per record. Used for test
// fixtures; not a consensus format.

inline void ContributionLedger::dump(std::ostream& out) const {
    nlohmann::json header;
    header["epoch"] = epoch;
    header["epoch_duration_s"] = epoch_duration_s;
    out << header.dump() << "\n";
    for (const auto& record : records) {
        nlohmann::json j;
        j["block_id"] = record.block_id;
        j["tx_count"] = record.tx_count;
        j["failed"] = record.failed;
        auto& votes = j["votes"];
        votes = nlohmann::json::array();
        for (const auto& [addr, vote] : record.per_node)
            votes.push_back({{"node", addr.to_hex()},
                             {"correct", vote.correct},
                             {"leader", vote.leader}});
        out << j.dump() << "\n";
    }
}

inline ContributionLedger ContributionLedger::load(std::istream& in) {
    ContributionLedger ledger;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("ledger stream is empty");
    {
        auto header = nlohmann::json::parse(line);
        ledger.epoch = header.at("epoch").get<std::uint64_t>();
        ledger.epoch_duration_s = header.at("epoch_duration_s").get<double>();
    }
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto j = nlohmann::json::parse(line);
        BehaviorRecord record;
        record.block_id = j.at("block_id").get<std::uint64_t>();
        record.tx_count = j.at("tx_count").get<std::uint64_t>();
        record.failed = j.at("failed").get<bool>();
        for (const auto& v : j.at("votes"))
            record.per_node[Address::parse_hex(v.at("node").get<std::string>())] =
                NodeVote{v.at("correct").get<bool>(), v.at("leader").get<bool>()};
        ledger.append(std::move(record));
    }
    return ledger;
}

} // namespace contribchain
