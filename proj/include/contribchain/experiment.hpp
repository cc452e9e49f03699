#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "contribchain/metrics.hpp"
#include "contribchain/plouvain.hpp"
#include "contribchain/sim.hpp"
#include "contribchain/workload.hpp"

namespace contribchain {

/// Runs one scenario end to end and writes the metric CSV families plus a
/// replay manifest into `out_dir`.
inline MetricsReport run_experiment(const ExperimentConfig& cfg,
                                    const std::vector<TraceRecord>& trace,
                                    std::string_view scenario_name, std::uint32_t epochs,
                                    const std::filesystem::path& out_dir) {
    const auto scenario = parse_scenario(scenario_name);
    World world(cfg, scenario);
    world.inject(trace);
    world.seed_balances(cfg.genesis_balance);
    world.run_epochs(epochs);
    const auto report = compute_metrics(world);

    std::filesystem::create_directories(out_dir);
    auto open = [&](const char* name) {
        std::ofstream out(out_dir / name);
        if (!out)
            throw std::runtime_error("cannot write " + (out_dir / name).string());
        return out;
    };
    {
        auto out = open("summary.csv");
        write_summary(out, report);
    }
    {
        auto out = open("queue.csv");
        write_queue_series(out, report);
    }
    {
        auto out = open("processing_time.csv");
        write_processing_times(out, report);
    }
    {
        auto out = open("security_variance.csv");
        write_security_variance(out, report);
    }
    {
        auto out = open("workload.csv");
        write_workload(out, report);
    }
    {
        auto out = open("runtimes.csv");
        write_runtimes(out, report);
    }
    {
        // everything needed to reproduce the run byte-for-byte
        auto out = open("manifest.txt");
        out << "scenario = " << scenario_name << "\n";
        out << "epochs = " << epochs << "\n";
        out << "k = " << cfg.k << "\n";
        out << "node_count = " << cfg.node_count << "\n";
        out << "epoch_duration = " << cfg.epoch_duration << "\n";
        out << "block_capacity = " << cfg.block_capacity << "\n";
        out << "block_interval = " << cfg.block_interval << "\n";
        out << "f = " << cfg.f << "\n";
        out << "t_na = " << cfg.t_na << "\n";
        out << "mu = " << cfg.mu << "\n";
        out << "theta = " << cfg.theta << "\n";
        out << "lambda = " << cfg.lambda << "\n";
        out << "alpha = " << cfg.alpha << "\n";
        out << "epsilon = " << cfg.epsilon << "\n";
        out << "beta = " << cfg.beta << "\n";
        out << "inject_rate = " << cfg.inject_rate << "\n";
        out << "seed = " << cfg.seed << "\n";
        out << "delay_setting = " << cfg.delay_setting << "\n";
        out << "genesis_balance = " << cfg.genesis_balance << "\n";
        out << "nacv_i_thre = " << cfg.nacv_i_thre << "\n";
        out << "nacv_var_thre_s = " << cfg.nacv_var_thre_s << "\n";
        out << "nacv_var_thre_t = " << cfg.nacv_var_thre_t << "\n";
        out << "credit_cap_quorum = " << (cfg.credit_cap_quorum ? "true" : "false") << "\n";
    }
    return report;
}

// ---------------------------------------------------------------------------
// Allocation benchmark: P-Louvain against the baselines on one graph.

struct BenchRow {
    std::string algorithm;
    double max_shard_time_s = 0.0;
    double cross_shard_ratio = 0.0;
    double runtime_ms = 0.0;
};

namespace bench_detail {

inline double cross_ratio(const TransactionGraph& g, std::span<const std::uint32_t> assignment) {
    if (g.total_edge_weight == 0)
        return 0.0;
    std::uint64_t cut = 0;
    for (std::uint32_t u = 0; u < g.size(); ++u)
        for (const auto& [v, w] : g.adjacency[u]) {
            if (v < u)
                continue;
            if (assignment[u] != assignment[v])
                cut += w;
        }
    return static_cast<double>(cut) / static_cast<double>(g.total_edge_weight);
}

inline double max_time(const TransactionGraph& g, std::span<const std::uint32_t> assignment,
                       const std::vector<double>& perf, double beta) {
    const auto loads = shard_loads(g, assignment, static_cast<std::uint32_t>(perf.size()), beta);
    double worst = 0.0;
    for (std::size_t s = 0; s < perf.size(); ++s)
        worst = std::max(worst, loads[s] / perf[s]);
    return worst;
}

/// Plain Louvain plus greedy size balancing: communities land on the
/// currently lightest shard, performance-blind.
inline std::vector<std::uint32_t> louvain_greedy_assignment(const TransactionGraph& g,
                                                            std::uint32_t k) {
    auto communities = normalize_communities(g, louvain_communities(g), k);
    std::vector<std::size_t> order(communities.size());
    std::vector<std::uint64_t> community_load(communities.size(), 0);
    for (std::size_t i = 0; i < communities.size(); ++i) {
        order[i] = i;
        for (auto v : communities[i])
            community_load[i] += g.vertex_load[v];
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return community_load[a] > community_load[b];
    });
    std::vector<std::uint64_t> shard_load_sum(k, 0);
    std::vector<std::uint32_t> assignment(g.size(), 0);
    for (auto idx : order) {
        std::uint32_t lightest = 0;
        for (std::uint32_t s = 1; s < k; ++s)
            if (shard_load_sum[s] < shard_load_sum[lightest])
                lightest = s;
        for (auto v : communities[idx])
            assignment[v] = lightest;
        shard_load_sum[lightest] += community_load[idx];
    }
    return assignment;
}

inline std::vector<std::uint32_t> hash_assignment(const TransactionGraph& g, std::uint32_t k) {
    std::vector<std::uint32_t> assignment(g.size(), 0);
    for (std::uint32_t v = 0; v < g.size(); ++v)
        assignment[v] = g.vertices[v].interval_index(k);
    return assignment;
}

} // namespace bench_detail

inline std::vector<BenchRow> bench_allocation(const TransactionGraph& g, std::uint32_t k,
                                              const std::vector<double>& perf, double beta,
                                              const std::vector<std::string>& algorithms) {
    std::vector<BenchRow> rows;
    for (const auto& algorithm : algorithms) {
        BenchRow row;
        row.algorithm = algorithm;
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::uint32_t> assignment;
        if (algorithm == "p-louvain") {
            assignment = p_louvain(g, k, perf, beta).assignment;
        } else if (algorithm == "louvain-greedy") {
            assignment = bench_detail::louvain_greedy_assignment(g, k);
        } else if (algorithm == "hash") {
            assignment = bench_detail::hash_assignment(g, k);
        } else {
            throw std::invalid_argument("unknown allocation algorithm '" + algorithm + "'");
        }
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        row.max_shard_time_s = bench_detail::max_time(g, assignment, perf, beta);
        row.cross_shard_ratio = bench_detail::cross_ratio(g, assignment);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_bench_rows(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "algorithm,max_shard_time_s,cross_shard_ratio,runtime_ms\n";
    for (const auto& row : rows)
        out << row.algorithm << "," << row.max_shard_time_s << "," << row.cross_shard_ratio << ","
            << row.runtime_ms << "\n";
}

} // namespace contribchain
