// Command-line driver: experiment runs, allocation benchmarks, the
// analytic A-Shard failure probability, and deterministic replay checks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "contribchain/contribchain.hpp"

namespace fs = std::filesystem;
using namespace contribchain;

namespace {

std::vector<double> parse_tps_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ','))
        out.push_back(std::stod(item));
    return out;
}

ExperimentConfig build_config(const std::string& config_path,
                              const std::vector<std::string>& overrides) {
    auto cfg = config_path.empty() ? default_config() : load_config_file(config_path);
    for (const auto& assignment : overrides)
        apply_override(cfg, assignment);
    const auto violations = validate_config(cfg);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "invalid configuration:";
        for (const auto& v : violations)
            msg << "\n  - " << v;
        throw std::runtime_error(msg.str());
    }
    return cfg;
}

void print_summary(const MetricsReport& report) {
    std::cout << "tps                " << report.tps << "\n"
              << "mean latency (ms)  " << report.mean_latency_ms << "\n"
              << "p50 latency (ms)   " << report.p50_latency_ms << "\n"
              << "p95 latency (ms)   " << report.p95_latency_ms << "\n"
              << "cross-shard ratio  " << report.cross_shard_ratio << "\n"
              << "injected           " << report.injected << "\n"
              << "committed          " << report.committed << "\n"
              << "queued at end      " << report.queued_at_end << "\n";
}

int cmd_run(const std::string& config_path, const std::string& trace_path, std::uint32_t epochs,
            const std::string& out_dir, const std::string& scenario,
            const std::vector<std::string>& overrides, std::size_t limit) {
    auto cfg = build_config(config_path, overrides);
    const auto trace = load_trace_file(trace_path, limit);
    if (trace.malformed > 0)
        std::cerr << "note: skipped " << trace.malformed << " malformed trace rows\n";

    const auto report = run_experiment(cfg, trace.records, scenario, epochs, out_dir);
    {
        // replay needs the workload source
        std::ofstream manifest(fs::path(out_dir) / "manifest.txt", std::ios::app);
        manifest << "trace = " << fs::absolute(trace_path).string() << "\n";
        manifest << "trace_limit = " << limit << "\n";
    }
    std::cout << "scenario " << scenario << ", " << epochs << " epochs, seed " << cfg.seed << "\n";
    print_summary(report);
    std::cout << "metrics written to " << out_dir << "\n";
    return 0;
}

int cmd_bench(const std::string& trace_path, std::uint32_t k, const std::string& tps_list,
              double beta, std::size_t limit, const std::string& out_path) {
    const auto perf = parse_tps_list(tps_list);
    if (perf.size() != k)
        throw std::runtime_error("need exactly K comma-separated TPS values");
    const auto trace = load_trace_file(trace_path, limit);
    std::vector<std::pair<Address, Address>> endpoints;
    endpoints.reserve(trace.records.size());
    for (const auto& r : trace.records)
        endpoints.emplace_back(r.from, r.to);
    const auto graph = build_graph(endpoints);
    std::cout << "graph: " << graph.size() << " accounts, " << graph.total_edge_weight
              << " weighted edges\n";

    const auto rows =
        bench_allocation(graph, k, perf, beta, {"p-louvain", "louvain-greedy", "hash"});
    write_bench_rows(std::cout, rows);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        write_bench_rows(out, rows);
        std::cout << "rows written to " << out_path << "\n";
    }
    return 0;
}

int cmd_security(std::uint64_t n, std::uint64_t na, std::optional<double> rho,
                 std::optional<std::uint64_t> malicious) {
    SecurityQuery query;
    if (malicious)
        query = SecurityQuery{n, na, *malicious};
    else if (rho)
        query = SecurityQuery::from_fraction(n, na, *rho);
    else
        throw std::runtime_error("pass either --rho or --malicious");
    const auto exact = a_shard_failure_probability_exact(query);
    std::ostringstream rational;
    rational << exact;
    std::cout << "Pr[A-Shard failure] = " << a_shard_failure_probability(query) << "  ("
              << rational.str() << ")\n";
    return 0;
}

int cmd_replay(const std::string& out_dir) {
    // re-run from the recorded manifest and compare the deterministic CSVs
    const fs::path dir(out_dir);
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest)
        throw std::runtime_error("no manifest.txt in " + out_dir);
    ExperimentConfig cfg = default_config();
    std::string scenario, trace_path, line;
    std::uint32_t epochs = 0;
    std::size_t limit = 0;
    while (std::getline(manifest, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos)
            continue;
        const auto key = line.substr(0, eq);
        const auto value = line.substr(eq + 3);
        if (key == "scenario")
            scenario = value;
        else if (key == "epochs")
            epochs = static_cast<std::uint32_t>(std::stoul(value));
        else if (key == "trace")
            trace_path = value;
        else if (key == "trace_limit")
            limit = std::stoull(value);
        else
            apply_override(cfg, key, value);
    }
    if (scenario.empty() || trace_path.empty())
        throw std::runtime_error("manifest is missing scenario or trace");

    const auto trace = load_trace_file(trace_path, limit);
    const auto replay_dir = dir / "replay";
    run_experiment(cfg, trace.records, scenario, epochs, replay_dir);

    bool all_equal = true;
    for (const char* name : {"summary.csv", "queue.csv", "processing_time.csv",
                             "security_variance.csv", "workload.csv"}) {
        std::ifstream a(dir / name), b(replay_dir / name);
        std::stringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        const bool equal = a.good() && b.good() && sa.str() == sb.str();
        std::cout << (equal ? "PASS " : "FAIL ") << name << "\n";
        all_equal = all_equal && equal;
    }
    std::cout << (all_equal ? "replay byte-identical" : "replay DIVERGED") << "\n";
    return all_equal ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ContribChain sharding protocol simulator"};
    app.require_subcommand(1);

    // run
    std::string config_path, trace_path, out_dir, scenario = "contribchain1";
    std::uint32_t epochs = 8;
    std::vector<std::string> overrides;
    std::size_t limit = 1000000;
    auto* run = app.add_subcommand("run", "simulate a scenario over a trace");
    run->add_option("--config", config_path, "config file (key = value)");
    run->add_option("--trace", trace_path, "transaction trace CSV")->required();
    run->add_option("--epochs", epochs, "number of epochs");
    run->add_option("--out", out_dir, "output directory for metric CSVs")->required();
    run->add_option("--scenario", scenario,
                    "allocation scenario: contribchain1|contribchain2|monoxide-hash");
    run->add_option("--set", overrides, "config override key=value (repeatable)");
    run->add_option("--limit", limit, "max trace rows to load");

    // bench-alloc
    std::string tps_list = "1000,800,800,600", bench_out;
    std::uint32_t bench_k = 4;
    double beta = 2.0;
    auto* bench = app.add_subcommand("bench-alloc", "compare account allocation algorithms");
    bench->add_option("--trace", trace_path, "transaction trace CSV")->required();
    bench->add_option("--k", bench_k, "shard count");
    bench->add_option("--tps", tps_list, "comma-separated shard TPS values");
    bench->add_option("--beta", beta, "cross-shard load weight");
    bench->add_option("--limit", limit, "max trace rows to load");
    bench->add_option("--out", bench_out, "also write rows to this CSV");

    // analyze-security
    std::uint64_t n = 0, na = 0;
    std::optional<double> rho;
    std::optional<std::uint64_t> malicious;
    auto* security = app.add_subcommand("analyze-security", "A-Shard failure probability");
    security->add_option("--n", n, "total node count")->required();
    security->add_option("--na", na, "A-Shard size")->required();
    security->add_option("--rho", rho, "malicious fraction in [0,1]");
    security->add_option("--malicious", malicious, "malicious node count");

    // replay
    auto* replay = app.add_subcommand("replay", "re-run a recorded experiment and diff CSVs");
    replay->add_option("--out", out_dir, "experiment output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, trace_path, epochs, out_dir, scenario, overrides, limit);
        if (bench->parsed())
            return cmd_bench(trace_path, bench_k, tps_list, beta, limit, bench_out);
        if (security->parsed())
            return cmd_security(n, na, rho, malicious);
        if (replay->parsed())
            return cmd_replay(out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
