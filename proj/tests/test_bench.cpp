#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ssivdr/bench.hpp"
#include "ssivdr/errors.hpp"

#include <filesystem>
#include <fstream>

using namespace ssivdr;
using bench::BenchConfig;

namespace {

BenchConfig small_config() {
    BenchConfig c;
    c.send_rates = {40};
    c.parallelism_levels = {1, 2};
    c.duration_s = 1;
    c.seed = 5;
    c.auth_rtt_ms = 5;
    c.device_pool = 8;
    return c;
}

} // namespace

TEST_CASE("config validation") {
    BenchConfig c = small_config();
    CHECK_NOTHROW(c.validate());
    SUBCASE("zero rate") {
        c.send_rates = {0};
        CHECK_THROWS_AS(c.validate(), InvalidConfig);
    }
    SUBCASE("no rates") {
        c.send_rates.clear();
        CHECK_THROWS_AS(c.validate(), InvalidConfig);
    }
    SUBCASE("zero duration") {
        c.duration_s = 0;
        CHECK_THROWS_AS(c.validate(), InvalidConfig);
    }
    SUBCASE("bad parallelism") {
        c.parallelism_levels = {1, -4};
        CHECK_THROWS_AS(c.validate(), InvalidConfig);
    }
}

TEST_CASE("throughput run produces paced, committed workload") {
    BenchConfig c = small_config();
    auto report = bench::run_issue_throughput(c);
    REQUIRE(report.rows.size() == 1);
    const auto& row = report.rows[0];
    CHECK(row.x == 40);
    CHECK(row.achieved_tps > 0);
    CHECK(row.achieved_tps <= 40.0 + 1e-9); // pacing never exceeds the target
    CHECK(row.committed == 40);             // rate * duration, all valid
    CHECK(row.rejected == 0);
    CHECK(row.mean_ms >= 0);
    CHECK(row.p99_ms >= row.p50_ms);
    CHECK_FALSE(report.ledger_digest.empty());
}

TEST_CASE("throughput is deterministic in content, committed counts and digest") {
    BenchConfig c = small_config();
    auto a = bench::run_issue_throughput(c);
    auto b = bench::run_issue_throughput(c);
    CHECK(a.ledger_digest == b.ledger_digest);
    CHECK(a.rows[0].committed == b.rows[0].committed);
    CHECK(a.rows[0].rejected == b.rows[0].rejected);

    c.seed = 6;
    auto other = bench::run_issue_throughput(c);
    CHECK(other.ledger_digest != a.ledger_digest);
}

TEST_CASE("baseline and endorsement throughput workloads both commit") {
    BenchConfig c = small_config();
    c.mode = ledger::Mode::Baseline;
    auto baseline = bench::run_issue_throughput(c);
    CHECK(baseline.rows[0].committed == 40);
    CHECK(baseline.rows[0].rejected == 0);
}

TEST_CASE("auth latency run measures every level and reports a cv") {
    BenchConfig c = small_config();
    auto report = bench::run_auth_latency(c);
    REQUIRE(report.rows.size() == 2);
    for (const auto& row : report.rows) {
        CHECK(row.committed > 0); // accepted authentications
        CHECK(row.rejected == 0);
        // The simulated round trip is the latency floor.
        CHECK(row.mean_ms >= c.auth_rtt_ms);
    }
    CHECK(report.latency_cv >= 0);
}

TEST_CASE("auth latency requires a big enough device fixture") {
    BenchConfig c = small_config();
    c.fixture_devices = 1; // smaller than the max parallelism level of 2
    CHECK_THROWS_AS(bench::run_auth_latency(c), InsufficientFixture);
}

TEST_CASE("resource profile compares both modes and reports ratios") {
    BenchConfig c = small_config();
    auto report = bench::run_resource_profile(c);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].mode != report.rows[1].mode);
    CHECK(report.mean_issue_latency_baseline_ms > 0);
    CHECK(report.mean_issue_latency_endorsement_ms > 0);
    CHECK(report.peak_rss_kb > 0);
    REQUIRE(report.counter_ratios.count("signature_verifications") == 1);
    // Endorsement evidence costs extra verifications.
    CHECK(report.counter_ratios.at("signature_verifications") > 1.0);
}

TEST_CASE("reports write csv and svg artifacts") {
    BenchConfig c = small_config();
    auto dir = std::filesystem::temp_directory_path() / "ssivdr_bench_test";
    std::filesystem::remove_all(dir);
    c.out_dir = dir.string();

    auto report = bench::run_issue_throughput(c);
    bench::write_outputs(report, c, "throughput");
    CHECK(std::filesystem::exists(dir / "throughput.csv"));
    CHECK(std::filesystem::exists(dir / "throughput.svg"));

    std::ifstream csv(dir / "throughput.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header.find("achieved_tps") != std::string::npos);

    std::ifstream svg(dir / "throughput.svg");
    std::string first;
    std::getline(svg, first);
    CHECK(first.find("<svg") != std::string::npos);
    std::filesystem::remove_all(dir);
}
