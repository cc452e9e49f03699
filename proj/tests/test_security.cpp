#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "contribchain/security.hpp"

using namespace contribchain;

namespace {

// Independent oracle: walk every committee of size n_A out of n nodes
// (the first `malicious` node indexes are bad) and count those with at
// least ceil(n_A/3) bad members. Exact by construction.
struct CommitteeCount {
    BigInt failing = 0;
    BigInt total = 0;
};

void enumerate(std::uint64_t n, std::uint64_t n_a, std::uint64_t malicious, std::uint64_t next,
               std::uint64_t picked, std::uint64_t picked_bad, CommitteeCount& count) {
    if (picked == n_a) {
        count.total += 1;
        if (picked_bad >= (n_a + 2) / 3)
            count.failing += 1;
        return;
    }
    if (n - next < n_a - picked)
        return;
    for (std::uint64_t i = next; i < n; ++i)
        enumerate(n, n_a, malicious, i + 1, picked + 1, picked_bad + (i < malicious ? 1 : 0),
                  count);
}

BigRational enumerated_probability(std::uint64_t n, std::uint64_t n_a, std::uint64_t malicious) {
    CommitteeCount count;
    enumerate(n, n_a, malicious, 0, 0, 0, count);
    return BigRational(count.failing, count.total);
}

} // namespace

TEST_CASE("binomial coefficients") {
    REQUIRE(binomial(0, 0) == 1);
    REQUIRE(binomial(5, 2) == 10);
    REQUIRE(binomial(5, 6) == 0);
    REQUIRE(binomial(52, 5) == 2598960);
    // Pascal identity deep in bigint territory
    REQUIRE(binomial(200, 100) == binomial(199, 99) + binomial(199, 100));
}

TEST_CASE("committee of two from four nodes, half malicious") {
    const SecurityQuery q{4, 2, 2};
    const auto p = a_shard_failure_probability_exact(q);
    REQUIRE(p == BigRational(5, 6));
    REQUIRE(a_shard_failure_probability(q) == Catch::Approx(5.0 / 6.0));
}

TEST_CASE("no malicious nodes means no failure") {
    for (std::uint64_t n_a = 1; n_a <= 8; ++n_a)
        REQUIRE(a_shard_failure_probability_exact({16, n_a, 0}) == 0);
}

TEST_CASE("analytic tail equals exhaustive committee enumeration") {
    for (std::uint64_t n = 1; n <= 16; ++n)
        for (std::uint64_t n_a = 1; n_a <= n; ++n_a)
            for (std::uint64_t malicious = 0; malicious <= n; ++malicious) {
                const auto analytic = a_shard_failure_probability_exact({n, n_a, malicious});
                const auto brute = enumerated_probability(n, n_a, malicious);
                REQUIRE(analytic == brute);
            }
}

TEST_CASE("probability is monotone in the malicious count") {
    const std::uint64_t n = 40, n_a = 10;
    BigRational prev = 0;
    for (std::uint64_t malicious = 0; malicious <= n; ++malicious) {
        const auto p = a_shard_failure_probability_exact({n, n_a, malicious});
        REQUIRE(p >= prev);
        REQUIRE(p >= 0);
        REQUIRE(p <= 1);
        prev = p;
    }
    REQUIRE(prev == 1);
}

TEST_CASE("fraction queries floor the malicious count") {
    const auto q = SecurityQuery::from_fraction(10, 4, 0.25);
    REQUIRE(q.malicious == 2);
    const auto q2 = SecurityQuery::from_fraction(10, 4, 0.3);
    REQUIRE(q2.malicious == 3);
    REQUIRE_THROWS_AS(SecurityQuery::from_fraction(10, 4, 1.5), std::invalid_argument);
    REQUIRE_THROWS_AS(a_shard_failure_probability_exact({4, 5, 1}), std::invalid_argument);
}

TEST_CASE("larger populations stay exact") {
    const auto p = a_shard_failure_probability_exact({200, 30, 50});
    REQUIRE(p > 0);
    REQUIRE(p < 1);
    const double v = a_shard_failure_probability({200, 30, 50});
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
}
