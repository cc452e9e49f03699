#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "contribchain/blocks.hpp"
#include "contribchain/config.hpp"
#include "contribchain/contribution.hpp"
#include "contribchain/nacv.hpp"
#include "contribchain/plouvain.hpp"
#include "contribchain/txgraph.hpp"
#include "contribchain/types.hpp"
#include "contribchain/workload.hpp"

namespace contribchain {

enum class AllocationScenario {
    contribchain1, // NACV + P-Louvain
    contribchain2, // P-Louvain only
    monoxide_hash, // address-prefix account placement, no node allocation
};

inline AllocationScenario parse_scenario(std::string_view name) {
    if (name == "contribchain1")
        return AllocationScenario::contribchain1;
    if (name == "contribchain2")
        return AllocationScenario::contribchain2;
    if (name == "monoxide-hash" || name == "monoxide")
        return AllocationScenario::monoxide_hash;
    throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

/// Per-epoch identity draw for the node population. Identities decide
/// A-Shard membership only; contribution values and mappings key on the
/// stable registration address.
inline std::vector<Address> establish_identities(const ExperimentConfig& cfg, std::uint64_t epoch,
                                                 std::uint64_t attempt = 0) {
    if (cfg.node_count == 0)
        throw std::invalid_argument("node count must be positive");
    std::vector<Address> out;
    out.reserve(cfg.node_count);
    for (std::uint32_t i = 0; i < cfg.node_count; ++i) {
        DetRng rng(DetRng::derive(cfg.seed, rng_tag::identity, epoch * 1000003ULL + attempt, i));
        out.push_back(rng.address());
    }
    return out;
}

struct ConsensusOutcome {
    TXBlock block;
    bool failed = false;
    std::map<Address, NodeVote> votes;
    std::int64_t round_time_ms = 0;
};

struct ArrivalEvent {
    std::int64_t available_ms = 0;
    std::uint64_t sequence = 0; // global tie-break, preserves FIFO
    Transaction tx;

    bool operator<(const ArrivalEvent& other) const {
        return std::tie(available_ms, sequence) < std::tie(other.available_ms, other.sequence);
    }
};

struct ShardRuntime {
    ShardRef shard;
    std::vector<Address> members; // ascending
    std::deque<Transaction> pool;
    std::set<ArrivalEvent> arrivals; // in-flight deliveries, ordered by time
    std::vector<TXBlock> chain;      // committed blocks only
    ContributionLedger ledger;
    std::int64_t clock_ms = 0;
    std::uint64_t round_counter = 0;
    std::int64_t last_commit_ms = 0;

    std::size_t backlog() const { return pool.size() + arrivals.size(); }
};

struct QueueSample {
    std::int64_t time_ms = 0;
    std::uint32_t shard = 0;
    std::size_t queue_len = 0;
};

struct AllocationTiming {
    std::uint64_t epoch = 0;
    std::string algorithm;
    double wall_ms = 0.0;
};

/// One consensus round over the given transactions. Needs at least four
/// members (3f+1 with f >= 1). The behavior record lands in the shard's
/// ledger; the caller advances the clock by round_time_ms.
inline ConsensusOutcome pbft_round(ShardRuntime& shard, std::vector<Transaction> txs, DetRng& rng,
                                   const ExperimentConfig& cfg,
                                   const std::map<Address, BehaviorProfile>& profiles) {
    const std::size_t n = shard.members.size();
    if (n < 4)
        throw std::runtime_error("shard below PBFT minimum");
    const Address leader = shard.members[shard.round_counter % n];

    // behavior draws in member order; the leader's draw decides whether
    // its proposal is valid
    std::map<Address, bool> misbehaves;
    for (const auto& addr : shard.members)
        misbehaves[addr] = rng.unit_real() < profiles.at(addr).malicious_prob;
    const bool proposal_valid = !misbehaves.at(leader);

    // honest nodes endorse valid proposals and reject invalid ones;
    // misbehaving nodes do the opposite; the leader backs its own
    std::map<Address, bool> votes_yes;
    std::size_t yes = 0;
    for (const auto& addr : shard.members) {
        const bool vote =
            addr == leader ? true : (misbehaves.at(addr) ? !proposal_valid : proposal_valid);
        votes_yes[addr] = vote;
        yes += vote ? 1 : 0;
    }
    const std::size_t quorum = (2 * n + 2) / 3;
    const bool success = proposal_valid && yes >= quorum;

    ConsensusOutcome outcome;
    outcome.failed = !success;
    outcome.block.shard = shard.shard;
    outcome.block.height = shard.chain.empty() ? 0 : shard.chain.back().height + 1;
    outcome.block.parent = shard.chain.empty() ? Digest{} : shard.chain.back().digest();
    outcome.block.txs = std::move(txs);
    outcome.block.committed = success;

    // round time: interval plus the slowest participant
    double max_delay = 0.0;
    for (const auto& addr : shard.members)
        max_delay = std::max(max_delay, profiles.at(addr).delay_ms);
    outcome.round_time_ms = cfg.block_interval_ms() + std::llround(max_delay);

    // credit marking: on success the correct action was the yes vote,
    // capped at quorum size in rotation (the leader stops collecting
    // commits once it has 2n/3 of them); on failure the no vote
    if (success) {
        std::vector<Address> yes_voters;
        for (const auto& addr : shard.members)
            if (votes_yes.at(addr))
                yes_voters.push_back(addr);
        std::set<Address> credited;
        if (cfg.credit_cap_quorum && yes_voters.size() > quorum) {
            const std::size_t start = shard.round_counter % yes_voters.size();
            for (std::size_t i = 0; i < quorum; ++i)
                credited.insert(yes_voters[(start + i) % yes_voters.size()]);
        } else {
            credited.insert(yes_voters.begin(), yes_voters.end());
        }
        for (const auto& addr : shard.members)
            outcome.votes[addr] = NodeVote{credited.count(addr) == 1, addr == leader};
    } else {
        for (const auto& addr : shard.members)
            outcome.votes[addr] = NodeVote{!votes_yes.at(addr), addr == leader};
    }

    BehaviorRecord record;
    record.block_id = shard.round_counter;
    record.tx_count = outcome.block.txs.size();
    record.failed = outcome.failed;
    record.per_node = outcome.votes;
    shard.ledger.append(std::move(record));

    ++shard.round_counter;
    return outcome;
}

/// Simulated world: epoch-driven execution of the protocol workflow.
/// Observable behavior is a pure function of (config, trace, seed);
/// allocation wall times are the one measurement outside that contract.
class World {
public:
    World(ExperimentConfig cfg, AllocationScenario scenario)
        : cfg_(std::move(cfg)), scenario_(scenario) {
        const auto violations = validate_config(cfg_);
        if (!violations.empty())
            throw std::invalid_argument("invalid config: " + violations.front());
        thresholds_ = NacvThresholds{cfg_.nacv_i_thre, cfg_.nacv_var_thre_s, cfg_.nacv_var_thre_t};
        init_nodes();
    }

    // ---------------------------------------------------------------
    // setup

    /// Schedules trace records at the configured injection rate. Accounts
    /// unknown at injection time auto-create with zero balance in their
    /// address-prefix shard.
    void inject(const std::vector<TraceRecord>& trace) {
        for (const auto& r : trace) {
            Transaction tx;
            tx.id = next_tx_id_++;
            tx.from = r.from;
            tx.to = r.to;
            tx.amount = r.amount;
            tx.inject_time_ms = static_cast<std::int64_t>(
                static_cast<double>(scheduled_.size()) * 1000.0 / cfg_.inject_rate);
            scheduled_.push_back(tx);
            touch_account(r.from);
            touch_account(r.to);
        }
        injected_total_ += trace.size();
    }

    /// Credits every known account; keeps the conservation checks
    /// non-vacuous when the trace carries no balances.
    void seed_balances(std::uint64_t amount) {
        for (auto& [addr, account] : accounts_)
            account.balance = amount;
    }

    // ---------------------------------------------------------------
    // run

    void run_epochs(std::uint32_t epochs) {
        for (std::uint32_t i = 0; i < epochs; ++i)
            process_epoch();
    }

    void process_epoch() {
        phase_identity_and_node_allocation();
        phase_account_allocation();
        phase_shard_update();
        phase_consensus();
        phase_data_collection();
        ++epoch_;
    }

    // ---------------------------------------------------------------
    // observers

    const ExperimentConfig& config() const { return cfg_; }
    std::uint64_t current_epoch() const { return epoch_; }
    const std::map<Address, Contribution>& globals() const { return globals_; }
    const NodeShardMapping& node_mapping() const { return mapping_; }
    const std::map<Address, Account>& accounts() const { return accounts_; }
    const std::vector<ShardRuntime>& shards() const { return shards_; }
    const std::vector<Transaction>& committed() const { return committed_; }
    const std::vector<QueueSample>& queue_series() const { return queue_series_; }
    const std::vector<std::vector<double>>& processing_time_s() const { return processing_time_s_; }
    const std::vector<double>& security_variance_series() const { return security_variance_series_; }
    const std::vector<AllocationTiming>& allocation_timings() const { return allocation_timings_; }
    const std::vector<SystemSummaryBlock>& s_blockchain() const { return s_blockchain_; }
    const std::vector<std::vector<ShardSummaryBlock>>& shard_summaries() const {
        return shard_summaries_;
    }
    const std::vector<StateBlock>& state_blocks() const { return state_blocks_; }
    std::uint64_t injected_total() const { return injected_total_; }

    std::size_t queued_total() const {
        std::size_t n = 0;
        for (const auto& shard : shards_)
            n += shard.backlog();
        return n;
    }

    /// Committed transaction count where a cross-shard pair counts once
    /// (on its relay commit).
    std::uint64_t committed_unique() const { return committed_unique_; }

    /// Balances plus value escrowed in in-flight relay halves.
    std::uint64_t total_balance() const {
        std::uint64_t total = 0;
        for (const auto& [addr, account] : accounts_)
            total += account.balance;
        return total + escrow_;
    }

    /// id -> (origin halves committed, relay halves committed).
    const std::map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>>& pair_commits() const {
        return pair_commits_;
    }

private:
    // ---------------------------------------------------------------
    // phase 1 + 2

    void phase_identity_and_node_allocation() {
        AShardSelection selection;
        std::map<Address, std::size_t> identity_owner;
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt == 100)
                throw std::runtime_error("could not draw a usable identity set");
            const auto identities = establish_identities(cfg_, epoch_, attempt);
            identity_owner.clear();
            for (std::size_t i = 0; i < identities.size(); ++i)
                identity_owner[identities[i]] = i;
            if (identity_owner.size() != identities.size())
                continue; // identity collision, redraw
            try {
                selection = a_shard_select(identities, cfg_.k);
            } catch (const std::runtime_error&) {
                continue; // empty A-Shard interval, redraw
            }
            break;
        }

        std::set<Address> new_a_shard;
        for (const auto& identity : selection.a_shard)
            new_a_shard.insert(node_ids_[identity_owner.at(identity)]);

        std::vector<Address> joining_w; // released from A-Shard duty this epoch
        if (epoch_ == 0) {
            for (std::uint32_t s = 0; s < cfg_.k; ++s)
                for (const auto& identity : selection.w_by_interval[s])
                    mapping_.assignment[node_ids_[identity_owner.at(identity)]] =
                        ShardRef::w_shard(s);
            for (const auto& addr : new_a_shard)
                mapping_.assignment[addr] = ShardRef::a_shard();
        } else {
            for (const auto& [addr, shard] : mapping_.assignment)
                if (shard.is_a_shard() && !new_a_shard.count(addr))
                    joining_w.push_back(addr);
            for (const auto& addr : new_a_shard)
                mapping_.assignment[addr] = ShardRef::a_shard();
            for (const auto& addr : joining_w)
                mapping_.assignment.erase(addr); // re-placed below
        }
        mapping_.epoch = epoch_;

        nacv_abort_ = false;
        if (epoch_ > 0) {
            const bool nacv_scenario = scenario_ == AllocationScenario::contribchain1;
            const bool nacv_due =
                static_cast<double>(epoch_) * cfg_.epoch_duration - last_nacv_s_ >= cfg_.t_na;
            if (nacv_scenario && nacv_due) {
                last_nacv_s_ = static_cast<double>(epoch_) * cfg_.epoch_duration;
                const auto t0 = std::chrono::steady_clock::now();
                auto result = nacv(mapping_, globals_, joining_w, nacv_workloads(), thresholds_,
                                   cfg_.k, cfg_.seed + epoch_);
                record_timing("nacv", t0);
                mapping_ = std::move(result.mapping);
                mapping_.epoch = epoch_;
                nacv_abort_ = result.aborted;
            } else {
                // placement runs every epoch so the mapping stays total;
                // the swap adjustments wait for their period or scenario
                place_new_nodes(mapping_, joining_w, globals_, nacv_workloads(), cfg_.k);
            }
        }

        enforce_min_shard_size();
        rebuild_shard_members();
    }

    // ---------------------------------------------------------------
    // phase 3

    void phase_account_allocation() {
        const bool plouvain_scenario = scenario_ != AllocationScenario::monoxide_hash;
        const bool due = epoch_ > 0 && epoch_ % cfg_.f == 0;
        if (!plouvain_scenario || (!due && !nacv_abort_))
            return;
        if (window_txs_.empty())
            return;

        const auto graph = build_graph(std::span<const Transaction>(window_txs_));
        std::vector<double> perf(cfg_.k, 0.0);
        {
            const auto members = mapping_.members_by_shard(cfg_.k);
            for (std::uint32_t s = 0; s < cfg_.k; ++s)
                for (const auto& addr : members[s])
                    perf[s] += globals_.at(addr).performance;
            // shards with no realized throughput yet still need a
            // positive rate for the time model
            for (auto& p : perf)
                p = std::max(p, 1e-6);
        }

        const auto t0 = std::chrono::steady_clock::now();
        const auto partition = p_louvain(graph, cfg_.k, perf, cfg_.beta);
        record_timing("p_louvain", t0);

        for (std::uint32_t v = 0; v < graph.size(); ++v)
            accounts_.at(graph.vertices[v]).shard = ShardRef::w_shard(partition.assignment[v]);
        window_txs_.clear();
    }

    // ---------------------------------------------------------------
    // phase 4

    void phase_shard_update() {
        const std::int64_t epoch_start =
            static_cast<std::int64_t>(epoch_) * cfg_.epoch_duration_ms();

        std::map<Address, ShardRef> account_shards;
        for (const auto& [addr, account] : accounts_)
            account_shards[addr] = account.shard;

        std::vector<std::vector<Transaction>> pending(cfg_.k);
        for (auto& shard : shards_) {
            for (const auto& tx : shard.pool)
                pending[shard.shard.index].push_back(tx);
            for (const auto& event : shard.arrivals)
                pending[shard.shard.index].push_back(event.tx);
            shard.pool.clear();
            shard.arrivals.clear();
        }

        auto block =
            build_state_block(epoch_, mapping_.assignment, account_shards, cfg_.k, pending);

        // reload the leftovers into their (possibly new) shards; relay
        // halves are ready immediately, fresh halves at their inject time
        for (std::uint32_t s = 0; s < cfg_.k; ++s)
            for (const auto& tx : block.reload[s]) {
                const auto available = tx.kind == TxKind::relay_half
                                           ? epoch_start
                                           : std::max(tx.inject_time_ms, epoch_start);
                shards_[s].arrivals.insert(ArrivalEvent{available, next_sequence_++, tx});
            }
        state_blocks_.push_back(std::move(block));

        // fresh epoch genesis block per shard
        for (auto& shard : shards_) {
            TXBlock genesis;
            genesis.shard = shard.shard;
            genesis.height = shard.chain.empty() ? 0 : shard.chain.back().height + 1;
            genesis.parent = shard.chain.empty() ? Digest{} : shard.chain.back().digest();
            genesis.committed = true;
            shard.chain.push_back(std::move(genesis));
            shard.ledger = ContributionLedger{};
            shard.ledger.epoch = epoch_;
            shard.ledger.epoch_duration_s = cfg_.epoch_duration;
            shard.clock_ms = std::max(shard.clock_ms, epoch_start);
            shard.last_commit_ms = epoch_start;
        }
    }

    // ---------------------------------------------------------------
    // phase 5

    void phase_consensus() {
        const std::int64_t epoch_end =
            static_cast<std::int64_t>(epoch_ + 1) * cfg_.epoch_duration_ms();

        // injections falling into this epoch enter their sender's shard
        while (injection_cursor_ < scheduled_.size() &&
               scheduled_[injection_cursor_].inject_time_ms < epoch_end) {
            const auto& tx = scheduled_[injection_cursor_];
            const auto shard = accounts_.at(tx.from).shard;
            shards_[shard.index].arrivals.insert(
                ArrivalEvent{tx.inject_time_ms, next_sequence_++, tx});
            ++injection_cursor_;
        }

        std::vector<DetRng> vote_rngs;
        for (std::uint32_t s = 0; s < cfg_.k; ++s)
            vote_rngs.emplace_back(DetRng::derive(cfg_.seed, rng_tag::votes, epoch_, s));

        // event-driven: always step the shard with the earliest clock
        for (;;) {
            ShardRuntime* next = nullptr;
            for (auto& shard : shards_)
                if (shard.clock_ms < epoch_end && (!next || shard.clock_ms < next->clock_ms))
                    next = &shard;
            if (!next)
                break;
            step_shard(*next, vote_rngs[next->shard.index]);
        }
    }

    void step_shard(ShardRuntime& shard, DetRng& rng) {
        while (!shard.arrivals.empty() && shard.arrivals.begin()->available_ms <= shard.clock_ms) {
            shard.pool.push_back(shard.arrivals.begin()->tx);
            shard.arrivals.erase(shard.arrivals.begin());
        }

        if (shard.pool.empty()) {
            shard.clock_ms += cfg_.block_interval_ms(); // idle tick
            queue_series_.push_back({shard.clock_ms, shard.shard.index, shard.pool.size()});
            return;
        }

        std::vector<Transaction> txs;
        while (!shard.pool.empty() && txs.size() < cfg_.block_capacity) {
            txs.push_back(shard.pool.front());
            shard.pool.pop_front();
        }

        auto outcome = pbft_round(shard, std::move(txs), rng, cfg_, profiles_);
        shard.clock_ms += outcome.round_time_ms;

        if (outcome.failed) {
            // the attempt consumed a round; its transactions retry next
            for (auto it = outcome.block.txs.rbegin(); it != outcome.block.txs.rend(); ++it)
                shard.pool.push_front(*it);
        } else {
            commit_block(shard, std::move(outcome.block), shard.clock_ms);
        }
        queue_series_.push_back({shard.clock_ms, shard.shard.index, shard.pool.size()});
    }

    void commit_block(ShardRuntime& shard, TXBlock block, std::int64_t commit_ms) {
        for (auto& tx : block.txs) {
            switch (tx.kind) {
            case TxKind::relay_half: {
                // credit side of a cross-shard pair; latency runs from the
                // original injection time
                accounts_.at(tx.to).balance += tx.amount;
                escrow_ -= tx.amount;
                tx.commit_time_ms = commit_ms;
                committed_.push_back(tx);
                pair_commits_[tx.id].second++;
                ++committed_unique_;
                break;
            }
            case TxKind::intra:
            case TxKind::cross_origin: {
                auto& sender = accounts_.at(tx.from);
                const auto recipient_shard = accounts_.at(tx.to).shard;
                // transfers saturate at the available balance, so an
                // underfunded sender moves less value, never negative
                const std::uint64_t moved = std::min(tx.amount, sender.balance);
                sender.balance -= moved;
                if (recipient_shard == shard.shard) {
                    tx.kind = TxKind::intra;
                    accounts_.at(tx.to).balance += moved;
                    tx.commit_time_ms = commit_ms;
                    committed_.push_back(tx);
                    ++committed_unique_;
                } else {
                    tx.kind = TxKind::cross_origin;
                    tx.commit_time_ms = commit_ms;
                    committed_.push_back(tx);
                    pair_commits_[tx.id].first++;
                    escrow_ += moved;
                    Transaction relay = tx;
                    relay.kind = TxKind::relay_half;
                    relay.amount = moved;
                    relay.commit_time_ms.reset();
                    shards_[recipient_shard.index].arrivals.insert(
                        ArrivalEvent{commit_ms, next_sequence_++, relay});
                }
                // the account graph sees each user transaction once
                window_txs_.push_back(tx);
                break;
            }
            }
        }
        shard.last_commit_ms = commit_ms;
        shard.chain.push_back(std::move(block));
    }

    // ---------------------------------------------------------------
    // phase 6

    void phase_data_collection() {
        const std::int64_t epoch_start =
            static_cast<std::int64_t>(epoch_) * cfg_.epoch_duration_ms();

        std::vector<ShardEpochData> epoch_data;
        std::vector<ContributionLedger> ledgers;
        for (auto& shard : shards_) {
            ShardEpochData data;
            data.shard = shard.shard;
            const auto counters = shard.ledger.role_counters();
            for (const auto& [addr, c] : counters)
                data.stage_contributions[addr] =
                    Contribution{stage_security(c, cfg_.mu, cfg_.theta, cfg_.lambda),
                                 stage_performance(shard.ledger, addr)};
            for (const auto& tx : shard.pool)
                data.pending.push_back(tx);
            for (const auto& event : shard.arrivals)
                data.pending.push_back(event.tx);
            data.latest_txblock = shard.chain.empty() ? Digest{} : shard.chain.back().digest();
            epoch_data.push_back(std::move(data));
            ledgers.push_back(shard.ledger);
        }

        std::vector<Address> a_members;
        for (const auto& [addr, shard] : mapping_.assignment)
            if (shard.is_a_shard())
                a_members.push_back(addr);
        globals_ = update_epoch(ledgers, globals_, a_members, cfg_);

        auto [shard_blocks, system] =
            build_summary_blocks(epoch_, s_blockchain_.size(), epoch_data, globals_, committed_);
        shard_summaries_.push_back(std::move(shard_blocks));
        s_blockchain_.push_back(std::move(system));

        // per-epoch balance metrics
        const auto members = mapping_.members_by_shard(cfg_.k);
        std::vector<double> mean_s(cfg_.k, 0.0);
        for (std::uint32_t s = 0; s < cfg_.k; ++s) {
            for (const auto& addr : members[s])
                mean_s[s] += globals_.at(addr).security;
            mean_s[s] /= static_cast<double>(members[s].size());
        }
        security_variance_series_.push_back(ShardStats::variance(mean_s));

        std::vector<double> processing(cfg_.k, 0.0);
        for (std::uint32_t s = 0; s < cfg_.k; ++s) {
            if (shards_[s].backlog() > 0)
                processing[s] = cfg_.epoch_duration; // never finished
            else
                processing[s] =
                    static_cast<double>(shards_[s].last_commit_ms - epoch_start) / 1000.0;
        }
        processing_time_s_.push_back(std::move(processing));
    }

    // ---------------------------------------------------------------
    // helpers

    void init_nodes() {
        DetRng rng(DetRng::derive(cfg_.seed, rng_tag::identity, 0xba5eULL));
        for (std::uint32_t i = 0; i < cfg_.node_count; ++i)
            node_ids_.push_back(rng.address());
        std::sort(node_ids_.begin(), node_ids_.end());
        node_ids_.erase(std::unique(node_ids_.begin(), node_ids_.end()), node_ids_.end());
        if (node_ids_.size() != cfg_.node_count)
            throw std::runtime_error("node id collision"); // 2^-192 per pair
        for (const auto& id : node_ids_)
            globals_[id] = genesis_contribution(cfg_);
        shards_.resize(cfg_.k);
        for (std::uint32_t s = 0; s < cfg_.k; ++s)
            shards_[s].shard = ShardRef::w_shard(s);
    }

    /// Table-style profiles attach to nodes by their position in the
    /// epoch-0 layout and stay with the node afterwards.
    void assign_profiles() {
        const auto setting = delay_setting(cfg_.delay_setting);
        const auto members = mapping_.members_by_shard(cfg_.k);
        for (std::uint32_t s = 0; s < cfg_.k; ++s) {
            const auto malicious =
                setting.malicious_per_shard[s % setting.malicious_per_shard.size()];
            for (std::uint32_t i = 0; i < members[s].size(); ++i) {
                BehaviorProfile profile;
                profile.position = i;
                profile.delay_ms = setting.shard_delay_ms * static_cast<double>(s) +
                                   setting.node_delay_ms * static_cast<double>(i);
                if (i < malicious) {
                    profile.malicious_prob =
                        malicious == 1
                            ? (setting.prob_lo + setting.prob_hi) / 2.0
                            : setting.prob_lo + (setting.prob_hi - setting.prob_lo) *
                                                    static_cast<double>(i) /
                                                    static_cast<double>(malicious - 1);
                }
                profiles_[members[s][i]] = profile;
            }
        }
        // epoch-0 A-Shard members run no consensus; honest, no delay
        for (const auto& [addr, shard] : mapping_.assignment)
            if (shard.is_a_shard())
                profiles_[addr] = BehaviorProfile{};
        profiles_assigned_ = true;
    }

    const BehaviorProfile& node_profile(const Address& addr) const { return profiles_.at(addr); }

    void touch_account(const Address& addr) {
        if (accounts_.count(addr))
            return;
        Account account;
        account.address = addr;
        account.balance = 0;
        account.shard = ShardRef::w_shard(addr.interval_index(cfg_.k));
        accounts_[addr] = account;
    }

    /// W(S) feeding NACV's t(S): queued work plus the account-graph load
    /// of the current window under the cross-shard weight model.
    std::vector<double> nacv_workloads() {
        std::vector<double> out(cfg_.k, 0.0);
        for (std::uint32_t s = 0; s < cfg_.k; ++s)
            out[s] = static_cast<double>(shards_[s].backlog());
        if (!window_txs_.empty()) {
            const auto graph = build_graph(std::span<const Transaction>(window_txs_));
            std::vector<std::uint32_t> assignment(graph.size(), 0);
            for (std::uint32_t v = 0; v < graph.size(); ++v)
                assignment[v] = accounts_.at(graph.vertices[v]).shard.index;
            const auto loads = shard_loads(graph, assignment, cfg_.k, cfg_.beta);
            for (std::uint32_t s = 0; s < cfg_.k; ++s)
                out[s] += loads[s];
        }
        return out;
    }

    void enforce_min_shard_size() {
        // PBFT needs 3f+1; keep every W-Shard at 4 or more by pulling the
        // smallest-address node out of the largest shard
        for (;;) {
            auto members = mapping_.members_by_shard(cfg_.k);
            std::uint32_t smallest = 0, largest = 0;
            for (std::uint32_t s = 0; s < cfg_.k; ++s) {
                if (members[s].size() < members[smallest].size())
                    smallest = s;
                if (members[s].size() > members[largest].size())
                    largest = s;
            }
            if (members[smallest].size() >= 4)
                return;
            if (members[largest].size() <= members[smallest].size() + 1)
                throw std::runtime_error("not enough nodes to keep every shard at PBFT minimum");
            mapping_.assignment[members[largest].front()] = ShardRef::w_shard(smallest);
        }
    }

    void rebuild_shard_members() {
        const auto members = mapping_.members_by_shard(cfg_.k);
        for (std::uint32_t s = 0; s < cfg_.k; ++s)
            shards_[s].members = members[s];
        if (!profiles_assigned_)
            assign_profiles();
    }

    void record_timing(const char* algorithm, std::chrono::steady_clock::time_point t0) {
        const auto elapsed =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        allocation_timings_.push_back({epoch_, algorithm, elapsed});
    }

    ExperimentConfig cfg_;
    AllocationScenario scenario_;
    NacvThresholds thresholds_;

    std::uint64_t epoch_ = 0;
    std::vector<Address> node_ids_;
    std::map<Address, BehaviorProfile> profiles_;
    bool profiles_assigned_ = false;
    std::map<Address, Contribution> globals_;
    NodeShardMapping mapping_;
    std::map<Address, Account> accounts_;
    std::vector<ShardRuntime> shards_;

    std::vector<Transaction> scheduled_;
    std::size_t injection_cursor_ = 0;
    std::uint64_t next_tx_id_ = 1;
    std::uint64_t next_sequence_ = 0;
    std::uint64_t injected_total_ = 0;

    std::vector<Transaction> window_txs_; // committed since last account allocation
    double last_nacv_s_ = 0.0;
    bool nacv_abort_ = false;

    std::vector<Transaction> committed_;
    std::uint64_t committed_unique_ = 0;
    std::uint64_t escrow_ = 0;
    std::map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> pair_commits_;

    std::vector<QueueSample> queue_series_;
    std::vector<std::vector<double>> processing_time_s_;
    std::vector<double> security_variance_series_;
    std::vector<AllocationTiming> allocation_timings_;
    std::vector<std::vector<ShardSummaryBlock>> shard_summaries_;
    std::vector<SystemSummaryBlock> s_blockchain_;
    std::vector<StateBlock> state_blocks_;
};

} // namespace contribchain
