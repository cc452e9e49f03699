#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "contribchain/txgraph.hpp"
#include "contribchain/workload.hpp"

using namespace contribchain;

TEST_CASE("load_trace reads well-formed rows in order") {
    std::istringstream in(
        "from,to,amount\n"
        "0a,0b,5\n"
        "0b,0c,1\n"
        "0c,0a,2\n");
    const auto load = load_trace(in, 100);
    REQUIRE(load.records.size() == 3);
    REQUIRE(load.malformed == 0);
    REQUIRE(load.records[0].from == Address::parse_hex("0a"));
    REQUIRE(load.records[0].amount == 5);
    REQUIRE(load.records[2].to == Address::parse_hex("0a"));
}

TEST_CASE("load_trace skips and counts malformed rows") {
    std::istringstream in(
        "from,to\n"
        "0a,0b\n"
        "zz,0c\n"
        "0b,0c\n");
    REQUIRE_THROWS_WITH(load_trace(in, 100), Catch::Matchers::ContainsSubstring("trace corrupt"));

    // under the 1% threshold the row is skipped and counted
    std::ostringstream big;
    big << "from,to\n";
    for (int i = 0; i < 200; ++i)
        big << "0a,0b\n";
    big << "bad-row\n";
    std::istringstream big_in(big.str());
    const auto load = load_trace(big_in, 10000);
    REQUIRE(load.records.size() == 200);
    REQUIRE(load.malformed == 1);
}

TEST_CASE("load_trace honors the limit and default amount") {
    std::ostringstream text;
    text << "from,to\n";
    for (int i = 0; i < 50; ++i)
        text << "0a,0b\n";
    std::istringstream in(text.str());
    const auto load = load_trace(in, 10);
    REQUIRE(load.records.size() == 10);
    REQUIRE(load.records[0].amount == 1);

    std::istringstream empty("");
    REQUIRE_THROWS(load_trace(empty, 10));
    std::istringstream self("from,to\n0a,0a\n");
    REQUIRE(load_trace(self, 10).self_payments == 1);
}

TEST_CASE("synth_trace is deterministic per seed") {
    const auto a = synth_trace(UniformModel{50}, 500, 7);
    const auto b = synth_trace(UniformModel{50}, 500, 7);
    const auto c = synth_trace(UniformModel{50}, 500, 8);
    REQUIRE(a.size() == 500);
    bool equal = true, differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        equal = equal && a[i].from == b[i].from && a[i].to == b[i].to;
        differs = differs || a[i].from != c[i].from || a[i].to != c[i].to;
    }
    REQUIRE(equal);
    REQUIRE(differs);
}

TEST_CASE("clustered model with full intra probability has no cross edges") {
    const auto trace = synth_trace(ClusteredModel{3, 20, 1.0}, 2000, 11);
    std::vector<std::pair<Address, Address>> endpoints;
    for (const auto& r : trace)
        endpoints.emplace_back(r.from, r.to);
    const auto g = build_graph(endpoints);
    const auto communities_expected = 3;
    // check connected components == clusters via simple BFS
    std::vector<int> component(g.size(), -1);
    int components = 0;
    for (std::uint32_t v = 0; v < g.size(); ++v) {
        if (component[v] != -1)
            continue;
        std::vector<std::uint32_t> stack{v};
        component[v] = components;
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (const auto& [w, weight] : g.adjacency[u])
                if (component[w] == -1) {
                    component[w] = components;
                    stack.push_back(w);
                }
        }
        ++components;
    }
    REQUIRE(components == communities_expected);
}

TEST_CASE("hotspot model concentrates traffic") {
    const auto trace = synth_trace(HotspotModel{100, 1, 0.8}, 4000, 13);
    // find the busiest account
    std::map<Address, std::size_t> incident;
    for (const auto& r : trace) {
        incident[r.from]++;
        incident[r.to]++;
    }
    std::size_t busiest = 0;
    for (const auto& [addr, count] : incident)
        busiest = std::max(busiest, count);
    // skew 0.8 means the hot account touches ~80% of txs; binomial
    // sigma ~ 0.006, so >= 50% is a generous floor
    REQUIRE(busiest >= trace.size() / 2);
}

TEST_CASE("trace dump/load round trip") {
    const auto trace = synth_trace(ClusteredModel{2, 10, 0.7}, 100, 17);
    std::stringstream buffer;
    dump_trace(buffer, trace);
    const auto loaded = load_trace(buffer, 1000);
    REQUIRE(loaded.records.size() == trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        REQUIRE(loaded.records[i].from == trace[i].from);
        REQUIRE(loaded.records[i].to == trace[i].to);
        REQUIRE(loaded.records[i].amount == trace[i].amount);
    }
}

TEST_CASE("synth model validation") {
    REQUIRE_THROWS_AS(synth_trace(UniformModel{50}, 0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(synth_trace(UniformModel{1}, 10, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(synth_trace(ClusteredModel{0, 10, 0.5}, 10, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(synth_trace(HotspotModel{10, 10, 0.5}, 10, 1), std::invalid_argument);
}
