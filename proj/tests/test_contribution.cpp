#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "contribchain/contribution.hpp"
#include "support/generators.hpp"

using namespace contribchain;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Address node_addr(std::uint64_t i) { return Address::from_u64(i + 1); }

// Single-record ledger over n nodes; `wrong` lists node indexes with e=0.
ContributionLedger one_record(std::uint64_t tx_count, bool failed, std::size_t n,
                              std::vector<std::size_t> wrong, double epoch_duration_s,
                              std::size_t leader = 0) {
    ContributionLedger ledger;
    ledger.epoch_duration_s = epoch_duration_s;
    BehaviorRecord record;
    record.block_id = 0;
    record.tx_count = tx_count;
    record.failed = failed;
    for (std::size_t i = 0; i < n; ++i)
        record.per_node[node_addr(i)] = NodeVote{true, i == leader};
    for (auto i : wrong)
        record.per_node[node_addr(i)].correct = false;
    ledger.append(std::move(record));
    return ledger;
}

// Follower-only counters with the given correct/wrong tallies.
RoleCounters follower_counters(std::uint64_t correct, std::uint64_t wrong) {
    RoleCounters c;
    c.follower_correct = correct;
    c.follower_wrong = wrong;
    return c;
}

} // namespace

TEST_CASE("stage performance on single records") {
    // committed block of 2000 tx split across 4 correct nodes over 5 s
    auto ledger = one_record(2000, false, 4, {}, 5.0);
    REQUIRE_THAT(stage_performance(ledger, node_addr(0)), WithinRel(100.0, 1e-12));

    // an incorrect node earns nothing from a successful block
    ledger = one_record(2000, false, 4, {3}, 5.0);
    REQUIRE(stage_performance(ledger, node_addr(3)) == 0.0);

    // failed block: the lone incorrect node absorbs the whole debit
    ledger = one_record(1000, true, 4, {3}, 10.0);
    REQUIRE_THAT(stage_performance(ledger, node_addr(3)), WithinRel(-100.0, 1e-12));

    REQUIRE_THROWS_WITH(stage_performance(ledger, Address::from_u64(999)), "node not in ledger");
}

TEST_CASE("stage security follower cases") {
    // all correct: full reward
    REQUIRE_THAT(stage_security(follower_counters(10, 0), 0.9, 1.5, 2.0),
                 WithinAbs(0.9, 1e-12));
    // wrong ratio exactly at the tolerance threshold of (0.75, 1.5)
    REQUIRE_THAT(stage_security(follower_counters(2, 1), 0.75, 1.5, 2.0),
                 WithinAbs(0.0, 1e-12));
    // half wrong
    REQUIRE_THAT(stage_security(follower_counters(5, 5), 0.9, 1.5, 2.0),
                 WithinAbs(-0.3, 1e-12));
    REQUIRE_THROWS_WITH(stage_security(RoleCounters{}, 0.9, 1.5, 2.0), "no behavior evidence");
}

TEST_CASE("stage security weighs leader rounds by lambda") {
    RoleCounters c;
    c.leader_wrong = 1;
    c.follower_correct = 2;
    // lambda=2: (0.9*2 - 1.5*2) / (2 + 2) = -0.3
    REQUIRE_THAT(stage_security(c, 0.9, 1.5, 2.0), WithinAbs(-0.3, 1e-12));
    // a lone leader error outweighs a lone follower error
    RoleCounters leader_err, follower_err;
    leader_err.leader_wrong = 1;
    leader_err.follower_correct = 3;
    follower_err.follower_wrong = 1;
    follower_err.follower_correct = 3;
    REQUIRE(stage_security(leader_err, 0.9, 1.5, 2.0) <
            stage_security(follower_err, 0.9, 1.5, 2.0));
}

TEST_CASE("update_global is a convex combination") {
    REQUIRE_THAT(update_global(0.5, 0.1, 0.7), WithinAbs(0.38, 1e-12));
    REQUIRE(update_global(0.5, 0.1, 1.0) == 0.5);
    REQUIRE(update_global(0.5, 0.1, 0.0) == 0.1);

    DetRng rng(21);
    for (int i = 0; i < 200; ++i) {
        const double prev = rng.unit_real() * 4 - 2;
        const double stage = rng.unit_real() * 4 - 2;
        const double alpha = rng.unit_real();
        const double out = update_global(prev, stage, alpha);
        REQUIRE(out >= std::min(prev, stage) - 1e-12);
        REQUIRE(out <= std::max(prev, stage) + 1e-12);
    }
    REQUIRE_THROWS_AS(update_global(0.0, 0.0, 1.5), std::invalid_argument);
}

TEST_CASE("tolerance threshold") {
    REQUIRE_THAT(tolerance_threshold(0.75, 1.5), WithinAbs(1.0 / 3.0, 1e-12));
    REQUIRE_THAT(tolerance_threshold(1.0, 1.0), WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(tolerance_threshold(0.9, 1.5), WithinAbs(0.375, 1e-12));
}

TEST_CASE("shard epoch TPS") {
    ContributionLedger ledger;
    ledger.epoch_duration_s = 10.0;
    auto push = [&](std::uint64_t tx, bool failed) {
        BehaviorRecord r;
        r.block_id = ledger.records.size();
        r.tx_count = tx;
        r.failed = failed;
        r.per_node[node_addr(0)] = NodeVote{true, true};
        r.per_node[node_addr(1)] = NodeVote{!failed, false};
        ledger.append(std::move(r));
    };
    push(2000, false);
    push(1000, true);
    REQUIRE_THAT(shard_epoch_tps(ledger), WithinRel(200.0, 1e-12));

    ContributionLedger empty;
    empty.epoch_duration_s = 4.0;
    REQUIRE(shard_epoch_tps(empty) == 0.0);
}

TEST_CASE("theorem 2: node performance contributions sum to shard TPS") {
    DetRng rng(22);
    for (int i = 0; i < 300; ++i) {
        const auto ledger = testgen::random_ledger(rng);
        double sum = 0.0;
        for (const auto& [addr, vote] : ledger.records.front().per_node)
            sum += stage_performance(ledger, addr);
        const double tps = shard_epoch_tps(ledger);
        REQUIRE_THAT(sum, WithinAbs(tps, 1e-9 * std::max(1.0, std::abs(tps))));
    }
}

TEST_CASE("theorem 1: stage security sign follows the tolerance threshold") {
    for (auto [mu, theta] : std::vector<std::pair<double, double>>{{0.9, 1.5}, {0.75, 1.5}}) {
        const double threshold = tolerance_threshold(mu, theta);
        for (int tenth = 0; tenth <= 10; ++tenth) {
            const double f_wrong = tenth / 10.0;
            const auto c = follower_counters(static_cast<std::uint64_t>(10 - tenth),
                                             static_cast<std::uint64_t>(tenth));
            const double ds = stage_security(c, mu, theta, 2.0);
            if (f_wrong < threshold - 1e-12)
                REQUIRE(ds > 0.0);
            else if (f_wrong > threshold + 1e-12)
                REQUIRE(ds < 0.0);
            else
                REQUIRE_THAT(ds, WithinAbs(0.0, 1e-12));
        }
    }
}

TEST_CASE("stage security range covers [-theta, mu] and never leaves it") {
    DetRng rng(23);
    const double mu = 0.9, theta = 1.5, lambda = 2.0;
    for (int i = 0; i < 500; ++i) {
        RoleCounters c;
        c.leader_correct = rng.bounded(20);
        c.leader_wrong = rng.bounded(20);
        c.follower_correct = rng.bounded(50);
        c.follower_wrong = rng.bounded(50);
        if (c.empty())
            c.follower_correct = 1;
        const double ds = stage_security(c, mu, theta, lambda);
        REQUIRE(ds <= mu + 1e-12);
        REQUIRE(ds >= -theta - 1e-12);
    }
    // extremes are attained
    REQUIRE(stage_security(follower_counters(7, 0), mu, theta, lambda) == mu);
    REQUIRE(stage_security(follower_counters(0, 7), mu, theta, lambda) == -theta);
}

TEST_CASE("all-honest quorum crediting keeps stage security in the band") {
    const double mu = 0.9, theta = 1.5, lambda = 2.0, epsilon = 0.05;
    const double center = (2.0 * mu - theta) / 3.0;
    for (std::size_t n : {6u, 9u, 12u, 24u, 30u}) {
        const auto ledger = testgen::quorum_band_ledger(n, 200);
        const auto counters = ledger.role_counters();
        REQUIRE(counters.size() == n);
        for (const auto& [addr, c] : counters) {
            const double ds = stage_security(c, mu, theta, lambda);
            REQUIRE_THAT(ds, WithinAbs(center, epsilon));
        }
    }
}

TEST_CASE("update_epoch folds stages and carries absentees") {
    auto cfg = default_config();
    const auto genesis = genesis_contribution(cfg);

    std::map<Address, Contribution> prev;
    for (std::uint64_t i = 0; i < 6; ++i)
        prev[node_addr(i)] = genesis;

    // nodes 0..3 participate; node 4 is on the A-Shard; node 5 is absent
    auto ledger = one_record(2000, false, 4, {}, 5.0);
    auto next = update_epoch({ledger}, prev, {node_addr(4)}, cfg);

    REQUIRE_THAT(next[node_addr(0)].security,
                 WithinAbs(update_global(genesis.security, cfg.mu, cfg.alpha), 1e-12));
    REQUIRE_THAT(next[node_addr(0)].performance,
                 WithinAbs(update_global(0.0, 100.0, cfg.alpha), 1e-12));
    REQUIRE_THAT(next[node_addr(4)].security,
                 WithinAbs(update_global(genesis.security, cfg.mu, cfg.alpha), 1e-12));
    REQUIRE(next[node_addr(4)].performance == genesis.performance);
    REQUIRE(next[node_addr(5)].security == genesis.security);
    REQUIRE(next[node_addr(5)].performance == genesis.performance);
}

TEST_CASE("repeated epochs converge to the stage value") {
    auto cfg = default_config();
    // constant stage -theta: global security approaches -theta geometrically
    double s = genesis_contribution(cfg).security;
    for (int e = 0; e < 60; ++e)
        s = update_global(s, -cfg.theta, cfg.alpha);
    REQUIRE_THAT(s, WithinAbs(-cfg.theta, 1e-6));

    // constant honest performance approaches the stage TPS share
    double p = 0.0;
    for (int e = 0; e < 60; ++e)
        p = update_global(p, 100.0, cfg.alpha);
    REQUIRE_THAT(p, WithinAbs(100.0, 1e-6));
}

TEST_CASE("ledger dump/load round trip") {
    DetRng rng(24);
    const auto ledger = testgen::random_ledger(rng, 8, 12);
    std::stringstream buffer;
    ledger.dump(buffer);
    const auto loaded = ContributionLedger::load(buffer);
    REQUIRE(loaded.epoch == ledger.epoch);
    REQUIRE(loaded.epoch_duration_s == ledger.epoch_duration_s);
    REQUIRE(loaded.records.size() == ledger.records.size());
    for (std::size_t i = 0; i < ledger.records.size(); ++i) {
        REQUIRE(loaded.records[i].tx_count == ledger.records[i].tx_count);
        REQUIRE(loaded.records[i].failed == ledger.records[i].failed);
        REQUIRE(loaded.records[i].per_node.size() == ledger.records[i].per_node.size());
    }
    // counters recomputed from the loaded copy agree
    REQUIRE(loaded.role_counters() == ledger.role_counters());
}

TEST_CASE("behavior record validation") {
    BehaviorRecord r;
    r.per_node[node_addr(0)] = NodeVote{true, true};
    r.per_node[node_addr(1)] = NodeVote{true, true}; // two leaders
    REQUIRE_THROWS_AS(r.validate(), std::invalid_argument);

    BehaviorRecord all_wrong;
    all_wrong.per_node[node_addr(0)] = NodeVote{false, true};
    REQUIRE_THROWS_AS(all_wrong.validate(), std::invalid_argument);

    BehaviorRecord failed_all_correct;
    failed_all_correct.failed = true;
    failed_all_correct.per_node[node_addr(0)] = NodeVote{true, true};
    failed_all_correct.per_node[node_addr(1)] = NodeVote{true, false};
    REQUIRE_THROWS_AS(failed_all_correct.validate(), std::invalid_argument);
}
