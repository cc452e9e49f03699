#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "contribchain/authmap.hpp"
#include "contribchain/contribution.hpp"
#include "contribchain/types.hpp"

#include "json.hpp"

namespace contribchain {

// ---------------------------------------------------------------------------
// Canonical byte encodings (docs/FORMATS.md). Commit observations
// (commit_time, committed flags) are bookkeeping, not identity, and stay
// out of every digest.

inline Bytes tx_bytes(const Transaction& tx) {
    ByteWriter w;
    w.u64(tx.id);
    const auto from = tx.from.bytes();
    const auto to = tx.to.bytes();
    w.raw(std::span<const unsigned char>(from.data(), from.size()));
    w.raw(std::span<const unsigned char>(to.data(), to.size()));
    w.u64(tx.amount);
    w.u64(static_cast<std::uint64_t>(tx.inject_time_ms));
    w.u8(static_cast<std::uint8_t>(tx.kind));
    return w.bytes();
}

inline Digest tx_digest(const Transaction& tx) {
    const auto bytes = tx_bytes(tx);
    return sha256(std::span<const unsigned char>(bytes.data(), bytes.size()));
}

inline Bytes contribution_bytes(const Contribution& c) {
    ByteWriter w;
    w.f64(c.security);
    w.f64(c.performance);
    return w.bytes();
}

// ---------------------------------------------------------------------------
// Root builders. Empty sets commit to the zero digest.

inline AuthenticatedMap contribution_map(const std::map<Address, Contribution>& values) {
    AuthenticatedMap m;
    for (const auto& [addr, c] : values) {
        const auto key = addr.bytes();
        const auto value = contribution_bytes(c);
        m = m.insert(std::span<const unsigned char>(key.data(), key.size()),
                     std::span<const unsigned char>(value.data(), value.size()));
    }
    return m;
}

inline AuthenticatedMap tx_map(const std::vector<Transaction>& txs) {
    AuthenticatedMap m;
    for (const auto& tx : txs) {
        const auto key = tx_digest(tx);
        const auto value = tx_bytes(tx);
        m = m.insert(std::span<const unsigned char>(key.bytes.data(), key.bytes.size()),
                     std::span<const unsigned char>(value.data(), value.size()));
    }
    return m;
}

inline AuthenticatedMap shard_assignment_map(const std::map<Address, ShardRef>& assignment) {
    AuthenticatedMap m;
    for (const auto& [addr, shard] : assignment) {
        const auto key = addr.bytes();
        ByteWriter w;
        w.u32(shard.index);
        m = m.insert(std::span<const unsigned char>(key.data(), key.size()),
                     std::span<const unsigned char>(w.bytes().data(), w.bytes().size()));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Block structures

/// Per-shard transaction block; `parent` links the shard's chain.
struct TXBlock {
    ShardRef shard;
    std::uint64_t height = 0;
    std::vector<Transaction> txs;
    Digest parent;
    bool committed = false;

    Digest digest() const {
        ByteWriter w;
        w.u8(0x10);
        w.u32(shard.index);
        w.u64(height);
        w.digest(parent);
        w.u32(static_cast<std::uint32_t>(txs.size()));
        for (const auto& tx : txs)
            w.digest(tx_digest(tx));
        return w.hash();
    }
};

/// End-of-epoch block a W-Shard sends to the A-Shard: the epoch's stage
/// contribution values and the transactions it could not process.
struct ShardSummaryBlock {
    ShardRef shard;
    std::uint64_t epoch = 0;
    Digest stage_contrib_root;
    Digest pending_tx_root;
    std::map<Address, Contribution> stage_contributions;
    std::vector<Transaction> pending;

    bool roots_match_payload() const {
        return stage_contrib_root == contribution_map(stage_contributions).root() &&
               pending_tx_root == tx_map(pending).root();
    }
};

struct SystemSummaryBlock {
    std::uint64_t epoch = 0;
    std::uint64_t height = 0;
    std::vector<Digest> latest_txblock_hashes; // one per W-Shard, in shard order
    Digest global_contrib_root;
    Digest tx_confirm_root;
    Digest tx_pending_root;
};

/// Epoch-boundary allocation block: node and account placements plus the
/// re-bucketed leftover transactions.
struct StateBlock {
    std::uint64_t epoch = 0;
    Digest node_info_root;
    Digest account_info_root;
    Digest tx_reload_root;
    std::map<Address, ShardRef> node_shard;
    std::map<Address, ShardRef> account_shard;
    std::vector<std::vector<Transaction>> reload; // indexed by new W-Shard

    bool roots_match_payload() const;
};

inline AuthenticatedMap reload_map(const std::vector<std::vector<Transaction>>& reload) {
    AuthenticatedMap m;
    for (std::size_t shard = 0; shard < reload.size(); ++shard)
        for (const auto& tx : reload[shard]) {
            const auto key = tx_digest(tx);
            ByteWriter w;
            w.u32(static_cast<std::uint32_t>(shard));
            const auto body = tx_bytes(tx);
            w.raw(std::span<const unsigned char>(body.data(), body.size()));
            m = m.insert(std::span<const unsigned char>(key.bytes.data(), key.bytes.size()),
                         std::span<const unsigned char>(w.bytes().data(), w.bytes().size()));
        }
    return m;
}

inline bool StateBlock::roots_match_payload() const {
    return node_info_root == shard_assignment_map(node_shard).root() &&
           account_info_root == shard_assignment_map(account_shard).root() &&
           tx_reload_root == reload_map(reload).root();
}

/// Re-buckets leftover transactions under the new account allocation:
/// origin halves follow the sender, relay halves follow the recipient.
inline StateBlock build_state_block(std::uint64_t epoch,
                                    const std::map<Address, ShardRef>& node_shard,
                                    const std::map<Address, ShardRef>& account_shard,
                                    std::uint32_t k,
                                    const std::vector<std::vector<Transaction>>& pending_by_old_shard) {
    StateBlock block;
    block.epoch = epoch;
    block.node_shard = node_shard;
    block.account_shard = account_shard;
    block.reload.resize(k);
    for (const auto& bucket : pending_by_old_shard) {
        for (const auto& tx : bucket) {
            const Address& owner = tx.kind == TxKind::relay_half ? tx.to : tx.from;
            auto it = account_shard.find(owner);
            if (it == account_shard.end())
                throw std::invalid_argument("pending tx references account without a shard: " +
                                            owner.to_hex());
            if (it->second.is_a_shard() || it->second.index >= k)
                throw std::invalid_argument("account mapped outside the W-Shards: " + owner.to_hex());
            block.reload[it->second.index].push_back(tx);
        }
    }
    block.node_info_root = shard_assignment_map(block.node_shard).root();
    block.account_info_root = shard_assignment_map(block.account_shard).root();
    block.tx_reload_root = reload_map(block.reload).root();
    return block;
}

/// Everything one W-Shard hands to the A-Shard at Phase 6.
struct ShardEpochData {
    ShardRef shard;
    std::map<Address, Contribution> stage_contributions;
    std::vector<Transaction> pending;
    Digest latest_txblock;
};

inline std::pair<std::vector<ShardSummaryBlock>, SystemSummaryBlock>
build_summary_blocks(std::uint64_t epoch, std::uint64_t system_height,
                     const std::vector<ShardEpochData>& shards,
                     const std::map<Address, Contribution>& globals,
                     const std::vector<Transaction>& confirmed) {
    std::vector<ShardSummaryBlock> shard_blocks;
    std::vector<Transaction> all_pending;
    for (const auto& data : shards) {
        ShardSummaryBlock b;
        b.shard = data.shard;
        b.epoch = epoch;
        b.stage_contributions = data.stage_contributions;
        b.pending = data.pending;
        b.stage_contrib_root = contribution_map(b.stage_contributions).root();
        b.pending_tx_root = tx_map(b.pending).root();
        shard_blocks.push_back(std::move(b));
        all_pending.insert(all_pending.end(), data.pending.begin(), data.pending.end());
    }

    SystemSummaryBlock system;
    system.epoch = epoch;
    system.height = system_height;
    for (const auto& data : shards)
        system.latest_txblock_hashes.push_back(data.latest_txblock);
    system.global_contrib_root = contribution_map(globals).root();
    system.tx_confirm_root = tx_map(confirmed).root();
    system.tx_pending_root = tx_map(all_pending).root();
    return {std::move(shard_blocks), std::move(system)};
}

// ---------------------------------------------------------------------------
// Line-delimited dumps with hex digests

inline nlohmann::json tx_to_json(const Transaction& tx) {
    nlohmann::json j;
    j["id"] = tx.id;
    j["from"] = tx.from.to_hex();
    j["to"] = tx.to.to_hex();
    j["amount"] = tx.amount;
    j["inject_ms"] = tx.inject_time_ms;
    if (tx.commit_time_ms)
        j["commit_ms"] = *tx.commit_time_ms;
    j["kind"] = static_cast<int>(tx.kind);
    return j;
}

inline void dump_block(std::ostream& out, const TXBlock& b) {
    nlohmann::json j;
    j["type"] = "tx_block";
    j["shard"] = b.shard.index;
    j["height"] = b.height;
    j["parent"] = b.parent.to_hex();
    j["digest"] = b.digest().to_hex();
    j["committed"] = b.committed;
    j["tx_count"] = b.txs.size();
    out << j.dump() << "\n";
}

inline void dump_block(std::ostream& out, const ShardSummaryBlock& b) {
    nlohmann::json j;
    j["type"] = "shard_summary";
    j["shard"] = b.shard.index;
    j["epoch"] = b.epoch;
    j["stage_contrib_root"] = b.stage_contrib_root.to_hex();
    j["pending_tx_root"] = b.pending_tx_root.to_hex();
    j["pending_count"] = b.pending.size();
    out << j.dump() << "\n";
}

inline void dump_block(std::ostream& out, const SystemSummaryBlock& b) {
    nlohmann::json j;
    j["type"] = "system_summary";
    j["epoch"] = b.epoch;
    j["height"] = b.height;
    auto& hashes = j["latest_txblock_hashes"];
    hashes = nlohmann::json::array();
    for (const auto& d : b.latest_txblock_hashes)
        hashes.push_back(d.to_hex());
    j["global_contrib_root"] = b.global_contrib_root.to_hex();
    j["tx_confirm_root"] = b.tx_confirm_root.to_hex();
    j["tx_pending_root"] = b.tx_pending_root.to_hex();
    out << j.dump() << "\n";
}

inline void dump_block(std::ostream& out, const StateBlock& b) {
    nlohmann::json j;
    j["type"] = "state_block";
    j["epoch"] = b.epoch;
    j["node_info_root"] = b.node_info_root.to_hex();
    j["account_info_root"] = b.account_info_root.to_hex();
    j["tx_reload_root"] = b.tx_reload_root.to_hex();
    std::size_t reloaded = 0;
    for (const auto& bucket : b.reload)
        reloaded += bucket.size();
    j["reload_count"] = reloaded;
    out << j.dump() << "\n";
}

} // namespace contribchain
