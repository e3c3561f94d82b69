#pragma once

#include "ssivdr/orchestrator.hpp"

#include <map>
#include <string>
#include <vector>

namespace ssivdr::bench {

struct BenchConfig {
    ledger::Mode mode = ledger::Mode::Endorsement;
    std::vector<int> send_rates{50};          // target tx/s per measurement point
    std::vector<int> parallelism_levels{1, 4, 16, 64};
    int duration_s = 5;
    trust::Threshold tau;
    std::uint64_t seed = 1;
    std::string out_dir;                      // empty: no files written
    std::size_t issuer_pool = 8;
    std::size_t device_pool = 64;
    // Simulated registry round trip for authentication flows. In-process
    // calls complete in microseconds; without a transport delay the latency
    // figures would measure scheduler noise instead of the protocol.
    int auth_rtt_ms = 25;
    std::size_t fixture_devices = 0;          // 0: sized to max parallelism

    void validate() const; // throws InvalidConfig
};

struct MeasurementRow {
    std::string mode;
    double x = 0; // target rate (tx/s) or parallelism level
    double achieved_tps = 0;
    double mean_ms = 0;
    double p50_ms = 0;
    double p95_ms = 0;
    double p99_ms = 0;
    std::uint64_t committed = 0;
    std::uint64_t rejected = 0;
    std::uint64_t sig_verifications = 0;
    std::uint64_t hash_computations = 0;
    double wall_s = 0;
};

struct BenchReport {
    std::vector<MeasurementRow> rows;
    double latency_cv = 0;                       // auth bench: stddev/mean of level means
    std::string ledger_digest;                   // determinism fingerprint of the last run
    double mean_issue_latency_endorsement_ms = 0;
    double mean_issue_latency_baseline_ms = 0;
    std::uint64_t peak_rss_kb = 0;
    std::map<std::string, double> counter_ratios; // resource bench: endorsement / baseline
};

/// Issue-path throughput: paced pre-signed issue transactions at each target send
/// rate. Workload content is deterministic under the seed.
BenchReport run_issue_throughput(const BenchConfig& config);

/// Authentication latency: concurrent challenge-response authentications at each
/// parallelism level against a pre-credentialed device fixture.
BenchReport run_auth_latency(const BenchConfig& config);

/// Resource comparison: fixed issue+verify workload in both modes; operation
/// counters and wall time as platform-independent resource proxies.
BenchReport run_resource_profile(const BenchConfig& config);

void write_throughput_csv(const BenchReport& report, const std::string& path);
void write_latency_csv(const BenchReport& report, const std::string& path);
void write_resource_csv(const BenchReport& report, const std::string& path);

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

/// Self-contained SVG line chart, one per figure analog.
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series);

/// Writes the CSV plus the matching chart for the given report kind into
/// config.out_dir ("throughput", "latency" or "resource").
void write_outputs(const BenchReport& report, const BenchConfig& config,
                   const std::string& kind);

} // namespace ssivdr::bench
