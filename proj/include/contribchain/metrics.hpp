#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <vector>

#include "contribchain/sim.hpp"

namespace contribchain {

struct MetricsReport {
    double tps = 0.0;
    double mean_latency_ms = 0.0;
    double p50_latency_ms = 0.0;
    double p95_latency_ms = 0.0;
    double cross_shard_ratio = 0.0;
    std::vector<QueueSample> queue_size_series;
    std::vector<std::vector<double>> per_shard_processing_time_s; // [epoch][shard]
    std::vector<double> shard_security_variance_series;           // per epoch
    std::vector<std::uint64_t> workload_per_shard;                // committed txs per shard
    std::vector<AllocationTiming> allocation_runtime;
    std::uint64_t injected = 0;
    std::uint64_t committed = 0;
    std::uint64_t queued_at_end = 0;
};

/// Aggregates a finished run. Cross-shard transactions count once, on the
/// relay commit; their latency runs injection to relay commit.
inline MetricsReport compute_metrics(const World& world) {
    MetricsReport report;
    report.injected = world.injected_total();
    report.committed = world.committed_unique();
    report.queued_at_end = world.queued_total();

    const double duration_s =
        static_cast<double>(world.current_epoch()) * world.config().epoch_duration;
    if (duration_s > 0.0)
        report.tps = static_cast<double>(report.committed) / duration_s;

    std::vector<double> latencies;
    std::uint64_t cross = 0;
    report.workload_per_shard.assign(world.config().k, 0);
    for (const auto& tx : world.committed()) {
        if (tx.kind == TxKind::cross_origin)
            continue; // the relay half carries the pair's completion
        if (tx.kind == TxKind::relay_half)
            ++cross;
        latencies.push_back(static_cast<double>(*tx.commit_time_ms - tx.inject_time_ms));
    }
    // committed work per shard counts both halves where they executed
    for (const auto& shard : world.shards())
        for (const auto& block : shard.chain)
            report.workload_per_shard[shard.shard.index] += block.txs.size();

    if (!latencies.empty()) {
        std::sort(latencies.begin(), latencies.end());
        double sum = 0.0;
        for (double v : latencies)
            sum += v;
        report.mean_latency_ms = sum / static_cast<double>(latencies.size());
        report.p50_latency_ms = latencies[latencies.size() / 2];
        report.p95_latency_ms = latencies[latencies.size() * 95 / 100];
        report.cross_shard_ratio =
            static_cast<double>(cross) / static_cast<double>(latencies.size());
    }

    report.queue_size_series = world.queue_series();
    report.per_shard_processing_time_s = world.processing_time_s();
    report.shard_security_variance_series = world.security_variance_series();
    report.allocation_runtime = world.allocation_timings();
    return report;
}

inline void write_summary(std::ostream& out, const MetricsReport& report) {
    out << "metric,value\n";
    out << "tps," << report.tps << "\n";
    out << "mean_latency_ms," << report.mean_latency_ms << "\n";
    out << "p50_latency_ms," << report.p50_latency_ms << "\n";
    out << "p95_latency_ms," << report.p95_latency_ms << "\n";
    out << "cross_shard_ratio," << report.cross_shard_ratio << "\n";
    out << "injected," << report.injected << "\n";
    out << "committed," << report.committed << "\n";
    out << "queued_at_end," << report.queued_at_end << "\n";
}

inline void write_queue_series(std::ostream& out, const MetricsReport& report) {
    out << "time_ms,shard,queue_len\n";
    for (const auto& sample : report.queue_size_series)
        out << sample.time_ms << "," << sample.shard << "," << sample.queue_len << "\n";
}

inline void write_processing_times(std::ostream& out, const MetricsReport& report) {
    out << "epoch,shard,processing_time_s\n";
    for (std::size_t e = 0; e < report.per_shard_processing_time_s.size(); ++e)
        for (std::size_t s = 0; s < report.per_shard_processing_time_s[e].size(); ++s)
            out << e << "," << s << "," << report.per_shard_processing_time_s[e][s] << "\n";
}

inline void write_security_variance(std::ostream& out, const MetricsReport& report) {
    out << "epoch,security_variance\n";
    for (std::size_t e = 0; e < report.shard_security_variance_series.size(); ++e)
        out << e << "," << report.shard_security_variance_series[e] << "\n";
}

inline void write_workload(std::ostream& out, const MetricsReport& report) {
    out << "shard,committed_txs\n";
    for (std::size_t s = 0; s < report.workload_per_shard.size(); ++s)
        out << s << "," << report.workload_per_shard[s] << "\n";
}

/// Wall-clock allocation timings; the one nondeterministic output, kept
/// in its own file so replay comparison can skip it.
inline void write_runtimes(std::ostream& out, const MetricsReport& report) {
    out << "epoch,algorithm,wall_ms\n";
    for (const auto& t : report.allocation_runtime)
        out << t.epoch << "," << t.algorithm << "," << t.wall_ms << "\n";
}

} // namespace contribchain
