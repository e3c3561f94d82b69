// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Covers trust-math oracle equivalence, scoring invariants,
// lifecycle soundness, ledger integrity, comparative throughput, issue
// overhead, authentication latency stability and end-to-end determinism.

#include "ssivdr/bench.hpp"
#include "ssivdr/errors.hpp"

#include "random_graph.hpp"
#include "trust_oracle.hpp"
#include "workload.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace ssivdr;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << number << ". " << name;
    if (!detail.empty()) std::cout << " — " << detail;
    std::cout << std::endl;
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1 & 2: trust engine vs brute-force oracle --------------------------

void criteria_trust_math() {
    auto t0 = std::chrono::steady_clock::now();
    constexpr int kGraphs = 200;
    int checked = 0;
    double worst = 0.0;
    std::string mismatch;
    std::string invariant_violation;

    for (std::uint64_t seed = 1; seed <= kGraphs; ++seed) {
        auto rg = fixtures::make_random_graph(seed, 12, 30);
        for (const auto& did : rg.dids) {
            double engine = trust::trust_score(rg.graph, did);
            double brute = oracle::score(rg.graph, did.text());
            worst = std::max(worst, std::abs(engine - brute));
            ++checked;
            if (std::abs(engine - brute) > 1e-12 && mismatch.empty()) {
                std::ostringstream os;
                os << "seed " << seed << " node " << did.text() << ": engine " << engine
                   << " vs oracle " << brute;
                mismatch = os.str();
            }

            if ((engine < 0.0 || engine > 1.0) && invariant_violation.empty()) {
                invariant_violation = "score out of range at seed " + std::to_string(seed);
            }

            // Weakest-link: a propagated score never exceeds the smallest
            // factor on its witnessing path.
            if (rg.graph.is_root(did.text())) continue;
            bool direct_root = false;
            if (auto it = rg.graph.incoming.find(did.text());
                it != rg.graph.incoming.end()) {
                for (const auto& [endorser, e] : it->second) {
                    if (rg.graph.is_root(endorser)) direct_root = true;
                }
            }
            if (direct_root) continue;
            try {
                auto [score, witness] = trust::propagated_trust(rg.graph, did);
                double min_factor = 1.0;
                for (std::size_t i = 1; i + 1 < witness.chain.size(); ++i) {
                    min_factor = std::min(
                        min_factor,
                        oracle::score(rg.graph, witness.chain[i].text(), {did.text()}));
                }
                const auto* last = rg.graph.edge(
                    witness.chain[witness.chain.size() - 2].text(), did.text());
                if (last) min_factor = std::min(min_factor, last->score);
                if (score > min_factor + 1e-12 && invariant_violation.empty()) {
                    invariant_violation = "weakest-link violated at seed " +
                                          std::to_string(seed) + " node " + did.text();
                }
            } catch (const NoTrustLinkage&) {
                // unreachable node: nothing to check
            }
        }
    }

    double elapsed = seconds_since(t0);
    {
        std::ostringstream os;
        os << kGraphs << " graphs, " << checked << " node scores, max |delta| " << worst
           << ", " << elapsed << " s";
        report(1, "trust engine matches the brute-force oracle within 1e-12",
               mismatch.empty() && elapsed < 10.0,
               mismatch.empty() ? os.str() : mismatch);
    }
    report(2, "all scores in [0,1]; propagated scores respect the weakest link",
           invariant_violation.empty(),
           invariant_violation.empty() ? "zero violations across the corpus"
                                       : invariant_violation);
}

// --- 3: lifecycle soundness ----------------------------------------------

void criterion_lifecycle() {
    std::string first_violation;
    std::uint64_t total_txs = 0;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        auto stats = fixtures::run_lifecycle_workload(seed, 500, 0.5, 4);
        total_txs += stats.txs;
        if (!stats.sound() && first_violation.empty()) {
            first_violation = stats.violations.front();
        }
    }
    std::ostringstream os;
    os << "20 seeded runs, " << total_txs << " transactions, zero violations";
    report(3,
           "no accept on revoked credentials, no unauthorized issuance, "
           "absorbing revocation, atomic transfer",
           first_violation.empty(), first_violation.empty() ? os.str() : first_violation);
}

// --- 4: replay equality and file tamper detection ------------------------

void criterion_integrity() {
    // Replay equality is asserted inside every workload audit; run one more
    // explicitly and then attack the persisted file.
    auto stats = fixtures::run_lifecycle_workload(7000, 400, 0.5, 4);
    bool replay_ok = stats.sound();

    // Build a persistent ledger to attack.
    auto man_key = fixtures::keypair_for(7001, "acc-man");
    ledger::GenesisConfig genesis;
    genesis.manufacturers.push_back({Did{man_key.key_id}, man_key.verification_key});
    genesis.tau = trust::Threshold(0.5);
    genesis.batch_limit = 4;
    ledger::Ledger reg(genesis);
    Timestamp t = 1'700'000'000'000;
    for (int i = 0; i < 24; ++i) {
        auto k = fixtures::keypair_for(7001, "acc-user" + std::to_string(i));
        IdentityRecord rec{Did{k.key_id}, Role::User, k.verification_key, std::nullopt,
                           std::nullopt};
        reg.submit(ledger::make_register_tx(rec, k, t++));
        auto e = fixtures::signed_endorsement(man_key, Did{man_key.key_id}, rec.did,
                                              0.6 + 0.01 * i, t);
        reg.submit(ledger::make_endorse_tx(e, man_key, t++));
    }
    reg.flush();
    auto path = (std::filesystem::temp_directory_path() / "ssivdr_acceptance.log").string();
    reg.save(path);

    // Index line extents so each tamper position maps to an expected height.
    std::vector<std::pair<std::size_t, std::size_t>> lines; // [start, end) incl. newline
    std::string content;
    {
        std::ifstream in(path, std::ios::binary);
        content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    std::size_t start = 0;
    for (std::size_t i = 0; i < content.size(); ++i) {
        if (content[i] == '\n') {
            lines.emplace_back(start, i + 1);
            start = i + 1;
        }
    }

    std::mt19937_64 rng(7002);
    std::uniform_int_distribution<std::size_t> pos_dist(0, content.size() - 1);
    int detected = 0, correct_height = 0;
    constexpr int kTampers = 100;
    for (int i = 0; i < kTampers; ++i) {
        std::size_t pos = pos_dist(rng);
        std::string tampered = content;
        tampered[pos] = static_cast<char>(tampered[pos] ^ 0x01);
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out << tampered;
        }
        std::size_t line_idx = 0;
        for (std::size_t li = 0; li < lines.size(); ++li) {
            if (pos >= lines[li].first && pos < lines[li].second) line_idx = li;
        }
        std::uint64_t expected = line_idx == 0 ? 0 : line_idx - 1;
        auto audit = ledger::audit_ledger_file(path);
        if (!audit.intact) {
            ++detected;
            if (audit.broken_height == expected) ++correct_height;
        }
    }
    std::remove(path.c_str());

    std::ostringstream os;
    os << detected << "/" << kTampers << " tampers detected, " << correct_height << "/"
       << kTampers << " with the correct breaking height";
    report(4, "replay is bit-exact and every file tamper is detected",
           replay_ok && detected == kTampers && correct_height == kTampers, os.str());
}

// --- 5 & 6: comparative throughput and issue overhead ---------------------

void criteria_comparative() {
    bench::BenchConfig cfg;
    cfg.send_rates = {25, 50, 100, 200};
    cfg.duration_s = 10;
    cfg.seed = 11;

    auto t0 = std::chrono::steady_clock::now();
    cfg.mode = ledger::Mode::Baseline;
    auto baseline = bench::run_issue_throughput(cfg);
    cfg.mode = ledger::Mode::Endorsement;
    auto endorsement = bench::run_issue_throughput(cfg);
    double elapsed = seconds_since(t0);

    bool parity = baseline.rows.size() == endorsement.rows.size();
    std::ostringstream os;
    for (std::size_t i = 0; parity && i < baseline.rows.size(); ++i) {
        double ratio = endorsement.rows[i].achieved_tps / baseline.rows[i].achieved_tps;
        os << (i ? ", " : "") << "rate " << baseline.rows[i].x << ": " << ratio * 100.0
           << "%";
        if (ratio < 0.80) parity = false;
    }
    os << "; " << elapsed << " s";
    report(5, "endorsement throughput stays within 80% of baseline at every rate",
           parity && elapsed < 120.0, os.str());

    bench::BenchConfig rcfg;
    rcfg.duration_s = 3;
    rcfg.seed = 12;
    auto resource = bench::run_resource_profile(rcfg);
    double lat_ratio = resource.mean_issue_latency_endorsement_ms /
                       resource.mean_issue_latency_baseline_ms;
    double sig_ratio = resource.counter_ratios.count("signature_verifications")
                           ? resource.counter_ratios.at("signature_verifications")
                           : 0.0;
    std::ostringstream os6;
    os6 << "issue latency ratio " << lat_ratio << " (bound 1.25); signature verification "
        << "ratio " << sig_ratio << " (informational)";
    report(6, "endorsement-mode issue latency overhead is bounded", lat_ratio <= 1.25,
           os6.str());
}

// --- 7: authentication latency stability ----------------------------------

void criterion_latency_stability() {
    bench::BenchConfig cfg;
    cfg.parallelism_levels = {1, 4, 16, 64};
    cfg.seed = 13;
    auto t0 = std::chrono::steady_clock::now();
    auto report_data = bench::run_auth_latency(cfg);
    double elapsed = seconds_since(t0);

    bool all_accepted = true;
    for (const auto& row : report_data.rows) {
        if (row.rejected != 0 || row.committed == 0) all_accepted = false;
    }
    std::ostringstream os;
    os << "cv " << report_data.latency_cv << " over levels {1,4,16,64}; " << elapsed << " s";
    report(7, "mean authentication latency stays stable across parallelism",
           all_accepted && report_data.latency_cv <= 0.35 && elapsed < 120.0, os.str());
}

// --- 8: determinism --------------------------------------------------------

void criterion_determinism() {
    auto a = fixtures::run_lifecycle_workload(555, 300, 0.5, 2);
    auto b = fixtures::run_lifecycle_workload(555, 300, 0.5, 2);
    bool workload_same = a.final_digest == b.final_digest && a.committed == b.committed &&
                         a.rejected == b.rejected && !a.final_digest.empty();

    bench::BenchConfig cfg;
    cfg.send_rates = {50};
    cfg.duration_s = 1;
    cfg.seed = 21;
    auto r1 = bench::run_issue_throughput(cfg);
    auto r2 = bench::run_issue_throughput(cfg);
    bool bench_same = r1.ledger_digest == r2.ledger_digest &&
                      r1.rows[0].committed == r2.rows[0].committed &&
                      r1.rows[0].rejected == r2.rows[0].rejected;

    std::ostringstream os;
    os << "workload digest " << a.final_digest.substr(0, 16) << "…, committed " << a.committed
       << ", rejected " << a.rejected << "; bench digest match " << std::boolalpha
       << bench_same;
    report(8, "identical seeds reproduce identical digests and counters",
           workload_same && bench_same, os.str());
}

} // namespace

int main() {
    std::cout << "acceptance suite\n----------------\n";
    criteria_trust_math();
    criterion_lifecycle();
    criterion_integrity();
    criteria_comparative();
    criterion_latency_stability();
    criterion_determinism();
    std::cout << "----------------\n"
              << (failures == 0 ? "all criteria passed" : "criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
