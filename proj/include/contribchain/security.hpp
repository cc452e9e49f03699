#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

namespace contribchain {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

inline BigInt binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n)
        return 0; // impossible draw
    if (k > n - k)
        k = n - k;
    BigInt result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        result *= (n - k + i);
        result /= i;
    }
    return result;
}

struct SecurityQuery {
    std::uint64_t total_nodes = 0;   // n
    std::uint64_t a_shard_size = 0;  // n_A
    std::uint64_t malicious = 0;     // floor(rho * n)

    static SecurityQuery from_fraction(std::uint64_t total_nodes, std::uint64_t a_shard_size,
                                       double rho) {
        if (rho < 0.0 || rho > 1.0)
            throw std::invalid_argument("rho must lie in [0,1]");
        // rho*n is treated as a count; floor with a guard against values
        // like 0.3*10 landing just under the integer
        const auto count =
            static_cast<std::uint64_t>(std::floor(rho * static_cast<double>(total_nodes) + 1e-9));
        return SecurityQuery{total_nodes, a_shard_size, count};
    }

    void validate() const {
        if (a_shard_size == 0 || a_shard_size > total_nodes)
            throw std::invalid_argument("a_shard_size must lie in [1, total_nodes]");
        if (malicious > total_nodes)
            throw std::invalid_argument("malicious count exceeds total nodes");
    }
};

/// Probability that a uniformly drawn A-Shard committee of n_A nodes
/// contains at least ceil(n_A/3) malicious members, out of n nodes of
/// which `malicious` are bad: the cumulative hypergeometric tail,
/// evaluated exactly.
inline BigRational a_shard_failure_probability_exact(const SecurityQuery& q) {
    q.validate();
    const std::uint64_t threshold = (q.a_shard_size + 2) / 3; // ceil(n_A/3)
    BigInt numerator = 0;
    for (std::uint64_t x = threshold; x <= q.a_shard_size; ++x) {
        if (x > q.malicious)
            break; // C(malicious, x) = 0 from here on
        if (q.a_shard_size - x > q.total_nodes - q.malicious)
            continue; // not enough honest nodes for the remainder
        numerator += binomial(q.malicious, x) *
                     binomial(q.total_nodes - q.malicious, q.a_shard_size - x);
    }
    return BigRational(numerator, binomial(q.total_nodes, q.a_shard_size));
}

inline double a_shard_failure_probability(const SecurityQuery& q) {
    return a_shard_failure_probability_exact(q).convert_to<double>();
}

} // namespace contribchain
