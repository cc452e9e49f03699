#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "contribchain/address.hpp"
#include "contribchain/rng.hpp"

namespace contribchain {

struct TraceRecord {
    Address from;
    Address to;
    std::uint64_t amount = 1;
};

struct TraceLoad {
    std::vector<TraceRecord> records;
    std::size_t malformed = 0;
    std::size_t self_payments = 0;
};

/// Reads a `from,to[,amount]` CSV. Malformed rows are skipped and counted;
/// more than 1% malformed rows marks the trace corrupt. Addresses shorter
/// than 64 hex digits are zero-padded to the canonical 256-bit form.
inline TraceLoad load_trace(std::istream& in, std::size_t limit) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("trace is empty");
    // tolerate a UTF-8 BOM and \r\n
    if (line.size() >= 3 && line[0] == '\xef')
        line.erase(0, 3);
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    const bool has_amount = line == "from,to,amount";
    if (!has_amount && line != "from,to")
        throw std::runtime_error("trace header must be from,to[,amount]");

    TraceLoad out;
    std::size_t data_rows = 0;
    while (out.records.size() < limit && std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        ++data_rows;
        auto c1 = line.find(',');
        auto c2 = has_amount ? line.find(',', c1 + 1) : std::string::npos;
        try {
            if (c1 == std::string::npos || (has_amount && c2 == std::string::npos))
                throw std::invalid_argument("missing column");
            TraceRecord record;
            record.from = Address::parse_hex(line.substr(0, c1));
            record.to = Address::parse_hex(
                line.substr(c1 + 1, has_amount ? c2 - c1 - 1 : std::string::npos));
            if (has_amount)
                record.amount = std::stoull(line.substr(c2 + 1));
            if (record.from == record.to)
                ++out.self_payments;
            out.records.push_back(record);
        } catch (const std::exception&) {
            ++out.malformed;
        }
    }
    if (data_rows > 0 && static_cast<double>(out.malformed) > 0.01 * static_cast<double>(data_rows))
        throw std::runtime_error("trace corrupt: " + std::to_string(out.malformed) + " of " +
                                 std::to_string(data_rows) + " rows malformed");
    return out;
}

inline TraceLoad load_trace_file(const std::string& path, std::size_t limit) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open trace file '" + path + "'");
    return load_trace(in, limit);
}

inline void dump_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
    out << "from,to,amount\n";
    for (const auto& r : records)
        out << r.from.to_hex() << "," << r.to.to_hex() << "," << r.amount << "\n";
}

// ---------------------------------------------------------------------------
// Synthetic workloads. Deterministic per (model, seed); the clustered
// model yields ground-truth communities for the allocation tests.

struct ClusteredModel {
    std::uint32_t clusters = 4;
    std::uint32_t accounts_per_cluster = 50;
    double intra_prob = 0.9;
};

struct UniformModel {
    std::uint32_t accounts = 200;
};

struct HotspotModel {
    std::uint32_t accounts = 200;
    std::uint32_t hot_accounts = 1;
    double skew = 0.8; // probability a tx touches a hot account
};

using SynthModel = std::variant<ClusteredModel, UniformModel, HotspotModel>;

inline std::vector<TraceRecord> synth_trace(const SynthModel& model, std::size_t n_tx,
                                            std::uint64_t seed) {
    if (n_tx == 0)
        throw std::invalid_argument("n_tx must be positive");
    DetRng rng(DetRng::derive(seed, rng_tag::synth));
    std::vector<TraceRecord> out;
    out.reserve(n_tx);

    if (const auto* m = std::get_if<ClusteredModel>(&model)) {
        if (m->clusters == 0 || m->accounts_per_cluster < 2)
            throw std::invalid_argument("clustered model needs clusters and >=2 accounts each");
        std::vector<Address> accounts;
        for (std::uint32_t i = 0; i < m->clusters * m->accounts_per_cluster; ++i)
            accounts.push_back(rng.address());
        auto pick_in = [&](std::uint64_t cluster, DetRng& r) {
            return accounts[cluster * m->accounts_per_cluster +
                            r.bounded(m->accounts_per_cluster)];
        };
        while (out.size() < n_tx) {
            const auto cluster = rng.bounded(m->clusters);
            const Address from = pick_in(cluster, rng);
            Address to;
            if (rng.unit_real() < m->intra_prob) {
                to = pick_in(cluster, rng);
            } else {
                to = accounts[rng.bounded(accounts.size())];
            }
            if (from == to)
                continue;
            out.push_back({from, to, 1});
        }
        return out;
    }
    if (const auto* m = std::get_if<UniformModel>(&model)) {
        if (m->accounts < 2)
            throw std::invalid_argument("uniform model needs >=2 accounts");
        std::vector<Address> accounts;
        for (std::uint32_t i = 0; i < m->accounts; ++i)
            accounts.push_back(rng.address());
        while (out.size() < n_tx) {
            const Address from = accounts[rng.bounded(accounts.size())];
            const Address to = accounts[rng.bounded(accounts.size())];
            if (from == to)
                continue;
            out.push_back({from, to, 1});
        }
        return out;
    }
    const auto& m = std::get<HotspotModel>(model);
    if (m.accounts < 2 || m.hot_accounts == 0 || m.hot_accounts >= m.accounts)
        throw std::invalid_argument("hotspot model needs hot_accounts < accounts, both positive");
    std::vector<Address> accounts;
    for (std::uint32_t i = 0; i < m.accounts; ++i)
        accounts.push_back(rng.address());
    while (out.size() < n_tx) {
        Address from, to;
        if (rng.unit_real() < m.skew) {
            // hot endpoint, random direction
            const Address hot = accounts[rng.bounded(m.hot_accounts)];
            const Address other = accounts[rng.bounded(accounts.size())];
            if (rng.unit_real() < 0.5) {
                from = hot;
                to = other;
            } else {
                from = other;
                to = hot;
            }
        } else {
            from = accounts[rng.bounded(accounts.size())];
            to = accounts[rng.bounded(accounts.size())];
        }
        if (from == to)
            continue;
        out.push_back({from, to, 1});
    }
    return out;
}

} // namespace contribchain
