#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "contribchain/authmap.hpp"
#include "contribchain/blocks.hpp"
#include "contribchain/rng.hpp"
#include "contribchain/sha256.hpp"

using namespace contribchain;

namespace {

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::map<std::string, std::string> load_golden(const std::string& name) {
    std::ifstream in(std::string(CONTRIBCHAIN_TEST_DIR) + "/golden/" + name);
    REQUIRE(in.good());
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find(" = ");
        if (eq == std::string::npos)
            continue;
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

} // namespace

TEST_CASE("sha256 matches the published test vectors") {
    REQUIRE(sha256(std::string_view("")).to_hex() ==
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    REQUIRE(sha256(std::string_view("abc")).to_hex() ==
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    REQUIRE(sha256(std::string_view("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")).to_hex() ==
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // incremental updates agree with one-shot hashing
    Sha256 h;
    h.update(std::string_view("ab"));
    h.update(std::string_view("c"));
    REQUIRE(h.finish() == sha256(std::string_view("abc")));
}

TEST_CASE("authenticated map insert and get") {
    AuthenticatedMap m;
    REQUIRE(m.empty());
    REQUIRE(m.root().is_zero());

    m = m.insert("alpha", "1");
    m = m.insert("beta", "2");
    REQUIRE(m.size() == 2);
    REQUIRE(m.get("alpha") == bytes_of("1"));
    REQUIRE(m.get("beta") == bytes_of("2"));
    REQUIRE(!m.get("gamma").has_value());

    // overwrite changes the value, not the size
    auto m2 = m.insert("alpha", "3");
    REQUIRE(m2.size() == 2);
    REQUIRE(m2.get("alpha") == bytes_of("3"));
    REQUIRE(m2.root() != m.root());

    // prefix keys coexist
    auto m3 = m.insert("alphabet", "4");
    REQUIRE(m3.get("alpha") == bytes_of("1"));
    REQUIRE(m3.get("alphabet") == bytes_of("4"));

    // snapshots persist: the original map is untouched
    REQUIRE(m.get("alpha") == bytes_of("1"));
    REQUIRE(!m.get("alphabet").has_value());

    REQUIRE_THROWS_AS(m.insert("", "x"), std::invalid_argument);
    REQUIRE_THROWS_AS(m.insert(std::string(65, 'k'), "x"), std::invalid_argument);
}

TEST_CASE("root is insertion-order independent and content-sensitive") {
    DetRng rng(31);
    std::map<std::string, std::string> reference;
    while (reference.size() < 100)
        reference[rng.address().to_hex().substr(0, 2 + rng.bounded(30))] =
            "v" + std::to_string(reference.size());

    std::vector<std::pair<std::string, std::string>> entries(reference.begin(), reference.end());
    AuthenticatedMap base;
    for (const auto& [k, v] : entries)
        base = base.insert(k, v);

    for (int round = 0; round < 6; ++round) {
        auto shuffled = entries;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.bounded(i)]);
        AuthenticatedMap m;
        for (const auto& [k, v] : shuffled)
            m = m.insert(k, v);
        REQUIRE(m.root() == base.root());
        REQUIRE(m.size() == base.size());
    }

    // changing any entry changes the root
    auto changed = base.insert(entries.front().first, "different");
    REQUIRE(changed.root() != base.root());
}

TEST_CASE("proof round trip on random maps") {
    DetRng rng(32);
    for (int round = 0; round < 5; ++round) {
        AuthenticatedMap m;
        std::vector<std::string> keys;
        const std::size_t n = 50 + rng.bounded(950);
        for (std::size_t i = 0; i < n; ++i) {
            std::string key = rng.address().to_hex().substr(0, 1 + rng.bounded(40));
            keys.push_back(key);
            m = m.insert(key, "value-" + std::to_string(i));
        }
        const auto root = m.root();
        for (int probe = 0; probe < 40; ++probe) {
            const auto& key = keys[rng.bounded(keys.size())];
            const auto proof = m.prove(std::span<const unsigned char>(
                reinterpret_cast<const unsigned char*>(key.data()), key.size()));
            REQUIRE(AuthenticatedMap::verify(root, proof));
        }
    }
}

TEST_CASE("tampered proofs fail verification") {
    AuthenticatedMap m;
    DetRng rng(33);
    for (int i = 0; i < 200; ++i)
        m = m.insert(rng.address().to_hex(), "payload-" + std::to_string(i));
    const std::string key = Address::from_u64(42).to_hex();
    m = m.insert(key, "target");
    const auto root = m.root();
    const auto proof = m.prove(
        std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(key.data()), key.size()));
    REQUIRE(AuthenticatedMap::verify(root, proof));

    // value flip
    auto bad = proof;
    bad.value[0] ^= 1;
    REQUIRE(!AuthenticatedMap::verify(root, bad));

    // key flip
    bad = proof;
    bad.key[3] ^= 1;
    REQUIRE(!AuthenticatedMap::verify(root, bad));

    // sibling digest flip
    bad = proof;
    for (auto& step : bad.steps)
        if (step.kind == ProofStep::Kind::branch && step.index != ProofStep::value_slot) {
            step.children[(step.index + 1) % 16].bytes[0] ^= 1;
            break;
        }
    REQUIRE(!AuthenticatedMap::verify(root, bad));

    // wrong root
    auto other_root = root;
    other_root.bytes[31] ^= 1;
    REQUIRE(!AuthenticatedMap::verify(other_root, proof));

    // absent key
    REQUIRE_THROWS_AS(m.prove(std::span<const unsigned char>(
                          reinterpret_cast<const unsigned char*>("nope"), 4)),
                      std::invalid_argument);

    // empty proof
    REQUIRE(!AuthenticatedMap::verify(root, MerkleProof{}));
}

TEST_CASE("tx block digests chain and exclude commit observations") {
    Transaction tx;
    tx.id = 7;
    tx.from = Address::from_u64(1);
    tx.to = Address::from_u64(2);
    tx.amount = 10;
    tx.inject_time_ms = 1234;

    TXBlock genesis;
    genesis.shard = ShardRef::w_shard(0);
    genesis.height = 0;

    TXBlock next;
    next.shard = ShardRef::w_shard(0);
    next.height = 1;
    next.parent = genesis.digest();
    next.txs = {tx};

    REQUIRE(next.parent == genesis.digest());
    REQUIRE(next.digest() != genesis.digest());

    // commit_time and committed flag do not alter identity
    auto same = next;
    same.txs[0].commit_time_ms = 9999;
    same.committed = true;
    REQUIRE(same.digest() == next.digest());

    // any identity field does
    auto different = next;
    different.txs[0].amount = 11;
    REQUIRE(different.digest() != next.digest());
}

TEST_CASE("summary block roots recompute from payloads") {
    std::map<Address, Contribution> stage{{Address::from_u64(1), {0.1, 50.0}},
                                          {Address::from_u64(2), {-0.2, 25.0}}};
    Transaction pending_tx;
    pending_tx.id = 3;
    pending_tx.from = Address::from_u64(5);
    pending_tx.to = Address::from_u64(6);
    pending_tx.amount = 1;

    std::vector<ShardEpochData> shards(2);
    shards[0].shard = ShardRef::w_shard(0);
    shards[0].stage_contributions = stage;
    shards[0].pending = {pending_tx};
    shards[0].latest_txblock = sha256(std::string_view("block-a"));
    shards[1].shard = ShardRef::w_shard(1);
    shards[1].latest_txblock = sha256(std::string_view("block-b"));

    std::map<Address, Contribution> globals{{Address::from_u64(1), {0.3, 40.0}}};

    auto [shard_blocks, system] = build_summary_blocks(4, 9, shards, globals, {});
    REQUIRE(shard_blocks.size() == 2);
    REQUIRE(system.latest_txblock_hashes.size() == 2);
    REQUIRE(system.epoch == 4);
    REQUIRE(system.height == 9);

    for (const auto& b : shard_blocks)
        REQUIRE(b.roots_match_payload());

    // tampering with the payload breaks the recomputation
    auto broken = shard_blocks[0];
    broken.stage_contributions[Address::from_u64(1)].performance += 1.0;
    REQUIRE(!broken.roots_match_payload());

    REQUIRE(system.global_contrib_root == contribution_map(globals).root());
    REQUIRE(system.tx_confirm_root.is_zero());
    // shard 1 had nothing pending, so the system pending root covers shard 0's
    REQUIRE(system.tx_pending_root == tx_map({pending_tx}).root());
}

TEST_CASE("state block re-buckets pending transactions by new owner shard") {
    std::map<Address, ShardRef> nodes{{Address::from_u64(100), ShardRef::w_shard(0)},
                                      {Address::from_u64(101), ShardRef::a_shard()}};
    std::map<Address, ShardRef> accounts{{Address::from_u64(1), ShardRef::w_shard(2)},
                                         {Address::from_u64(2), ShardRef::w_shard(1)},
                                         {Address::from_u64(3), ShardRef::w_shard(0)}};

    Transaction origin;
    origin.id = 1;
    origin.from = Address::from_u64(1); // moved to shard 2
    origin.to = Address::from_u64(2);
    origin.kind = TxKind::cross_origin;

    Transaction relay;
    relay.id = 2;
    relay.from = Address::from_u64(3);
    relay.to = Address::from_u64(2); // recipient owns relay halves; shard 1
    relay.kind = TxKind::relay_half;

    const std::vector<std::vector<Transaction>> pending = {{origin}, {relay}, {}};
    const auto block = build_state_block(5, nodes, accounts, 3, pending);

    REQUIRE(block.reload.size() == 3);
    REQUIRE(block.reload[0].empty());
    REQUIRE(block.reload[1].size() == 1);
    REQUIRE(block.reload[1][0].id == 2);
    REQUIRE(block.reload[2].size() == 1);
    REQUIRE(block.reload[2][0].id == 1);
    REQUIRE(block.roots_match_payload());

    // nothing pending commits to the zero digest
    const std::vector<std::vector<Transaction>> none = {{}, {}, {}};
    const auto empty_block = build_state_block(6, nodes, accounts, 3, none);
    REQUIRE(empty_block.tx_reload_root.is_zero());

    // orphan account
    Transaction orphan = origin;
    orphan.from = Address::from_u64(999);
    REQUIRE_THROWS_AS(build_state_block(7, nodes, accounts, 3, {{orphan}}),
                      std::invalid_argument);
}

TEST_CASE("golden roots stay stable") {
    const auto golden = load_golden("authstate_roots.txt");
    REQUIRE(!golden.empty());

    // fixed generic map
    AuthenticatedMap generic;
    for (int i = 0; i < 100; ++i) {
        char key[16], value[16];
        std::snprintf(key, sizeof key, "node-%02d", i);
        std::snprintf(value, sizeof value, "value-%02d", i);
        generic = generic.insert(key, value);
    }
    REQUIRE(generic.root().to_hex() == golden.at("generic_map"));

    // fixed contribution map
    std::map<Address, Contribution> contribs;
    for (std::uint64_t i = 0; i < 10; ++i)
        contribs[Address::from_u64(i * 7 + 1)] =
            Contribution{static_cast<double>(i) * 0.01 - 0.5, static_cast<double>(i) * 2.5};
    REQUIRE(contribution_map(contribs).root().to_hex() == golden.at("contribution_map"));

    // fixed tx map
    std::vector<Transaction> txs;
    for (std::uint64_t i = 0; i < 20; ++i) {
        Transaction tx;
        tx.id = i;
        tx.from = Address::from_u64(i + 1);
        tx.to = Address::from_u64((i + 5) % 20 + 1);
        tx.amount = i * 3;
        tx.inject_time_ms = static_cast<std::int64_t>(i * 100);
        tx.kind = i % 4 == 0 ? TxKind::cross_origin : TxKind::intra;
        txs.push_back(tx);
    }
    REQUIRE(tx_map(txs).root().to_hex() == golden.at("tx_map"));
    REQUIRE(tx_digest(txs[0]).to_hex() == golden.at("first_tx_digest"));

    REQUIRE(sha256(std::string_view("contribchain")).to_hex() == golden.at("sha256_name"));
}

TEST_CASE("block dumps are line-delimited json with hex digests") {
    TXBlock b;
    b.shard = ShardRef::w_shard(1);
    b.height = 3;
    b.committed = true;
    std::ostringstream out;
    dump_block(out, b);
    const auto line = out.str();
    REQUIRE(line.back() == '\n');
    const auto j = nlohmann::json::parse(line);
    REQUIRE(j.at("type") == "tx_block");
    REQUIRE(j.at("digest").get<std::string>().size() == 64);
    REQUIRE(j.at("shard") == 1);
}
