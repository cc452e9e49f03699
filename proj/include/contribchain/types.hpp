#pragma once

#include <compare>
#include <cstdint>
#include <optional>

#include "contribchain/address.hpp"

namespace contribchain {

/// Either one of the K worker shards or the administrative shard.
struct ShardRef {
    static constexpr std::uint32_t a_shard_sentinel = 0xffffffffu;

    std::uint32_t index = a_shard_sentinel;

    static constexpr ShardRef w_shard(std::uint32_t i) { return ShardRef{i}; }
    static constexpr ShardRef a_shard() { return ShardRef{a_shard_sentinel}; }

    constexpr bool is_a_shard() const { return index == a_shard_sentinel; }

    auto operator<=>(const ShardRef&) const = default;
};

struct BehaviorProfile {
    std::uint32_t position = 0;   // node index within its shard at configuration time
    double malicious_prob = 0.0;  // probability of misbehaving per consensus round
    double delay_ms = 0.0;        // L_s * shard + L_n * position
};

struct Node {
    Address id;
    ShardRef shard;
    double sec_contrib = 0.0;  // global security contribution value
    double perf_contrib = 0.0; // global performance contribution value
    BehaviorProfile behavior;
};

struct Account {
    Address address;
    std::uint64_t balance = 0;
    ShardRef shard;
};

enum class TxKind : std::uint8_t {
    intra,        // sender and recipient in the same shard at processing time
    cross_origin, // debit half of a cross-shard transaction
    relay_half,   // credit half, enqueued at the recipient shard
};

struct Transaction {
    std::uint64_t id = 0; // stable over both halves of a cross-shard pair
    Address from;
    Address to;
    std::uint64_t amount = 0;
    std::int64_t inject_time_ms = 0;
    std::optional<std::int64_t> commit_time_ms;
    TxKind kind = TxKind::intra;
};

} // namespace contribchain
