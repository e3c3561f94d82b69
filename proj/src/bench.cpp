#include "ssivdr/bench.hpp"

#include "ssivdr/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <thread>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/resource.h>
#endif

namespace ssivdr::bench {

namespace {

using Clock = std::chrono::steady_clock;
using ledger::Ledger;
using ledger::LedgerState;
using ledger::Mode;
using ledger::Transaction;
using orchestrator::AuthOutcome;
using orchestrator::Orchestrator;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

crypto::KeyPair seeded_keypair(std::uint64_t seed, const std::string& label, std::size_t index) {
    std::string material = "ssivdr-bench:" + std::to_string(seed) + ":" + label + ":" +
                           std::to_string(index);
    crypto::Digest d = crypto::sha256(material);
    return crypto::generate_keypair(std::span<const std::uint8_t>(d.bytes));
}

/// Deterministic monotone timestamps for transaction content; wall time is
/// measured separately so workloads are bit-reproducible under a seed.
struct LogicalClock {
    std::atomic<Timestamp> t{1'700'000'000'000};
    Timestamp operator()() { return t.fetch_add(1); }
};

struct CounterSnapshot {
    std::uint64_t sig_verifications = 0;
    std::uint64_t signatures = 0;
    std::uint64_t hashes = 0;

    static CounterSnapshot take() {
        auto& c = crypto::counters();
        return {c.signature_verifications.load(), c.signatures_created.load(),
                c.hash_computations.load()};
    }
    CounterSnapshot delta(const CounterSnapshot& later) const {
        return {later.sig_verifications - sig_verifications, later.signatures - signatures,
                later.hashes - hashes};
    }
};

struct Fixture {
    crypto::KeyPair man_key;
    IdentityRecord man_rec;
    std::vector<crypto::KeyPair> issuer_keys;
    std::vector<IdentityRecord> issuer_recs;
    std::vector<crypto::KeyPair> device_keys;
    std::vector<IdentityRecord> device_recs;
    std::shared_ptr<LogicalClock> clock;
    std::unique_ptr<Ledger> ledger;
    std::unique_ptr<Orchestrator> orch;

    const IdentityRecord& issuer_for(std::size_t i, Mode mode) const {
        return mode == Mode::Baseline ? man_rec : issuer_recs[i % issuer_recs.size()];
    }
    const crypto::KeyPair& issuer_key_for(std::size_t i, Mode mode) const {
        return mode == Mode::Baseline ? man_key : issuer_keys[i % issuer_keys.size()];
    }
};

void expect_committed(const ledger::Receipt& r, const char* what) {
    if (!r.committed) {
        throw InvalidConfig(std::string("fixture setup rejected at ") + what + ": " +
                            ledger::to_string(r.reason));
    }
}

Fixture make_fixture(const BenchConfig& config, Mode mode, std::size_t n_issuers,
                     std::size_t n_devices) {
    Fixture f;
    f.clock = std::make_shared<LogicalClock>();
    f.man_key = seeded_keypair(config.seed, "manufacturer", 0);
    f.man_rec.did = Did::from_key(f.man_key.verification_key);
    f.man_rec.role = Role::Manufacturer;
    f.man_rec.verification_key = f.man_key.verification_key;

    ledger::GenesisConfig genesis;
    genesis.manufacturers.push_back({f.man_rec.did, f.man_key.verification_key});
    genesis.tau = config.tau;
    genesis.mode = mode;
    f.ledger = std::make_unique<Ledger>(genesis);
    auto clock = f.clock;
    f.orch = std::make_unique<Orchestrator>(*f.ledger, [clock] { return (*clock)(); });

    for (std::size_t i = 0; i < n_issuers; ++i) {
        auto key = seeded_keypair(config.seed, "issuer", i);
        IdentityRecord rec;
        rec.did = Did::from_key(key.verification_key);
        rec.role = Role::User;
        rec.verification_key = key.verification_key;
        expect_committed(f.orch->register_identity(rec, key), "register issuer");
        if (mode == Mode::Endorsement) {
            expect_committed(f.orch->endorse(f.man_rec.did, f.man_key, rec.did, 0.9),
                             "endorse issuer");
            expect_committed(f.orch->onboard_issuer(rec, key), "onboard issuer");
        }
        f.issuer_keys.push_back(key);
        f.issuer_recs.push_back(rec);
    }

    for (std::size_t i = 0; i < n_devices; ++i) {
        auto key = seeded_keypair(config.seed, "device", i);
        const auto& owner = f.issuer_recs[i % f.issuer_recs.size()];
        const auto& owner_key = f.issuer_keys[i % f.issuer_keys.size()];
        IdentityRecord rec;
        rec.did = Did::from_key(key.verification_key);
        rec.role = Role::Device;
        rec.verification_key = key.verification_key;
        rec.device_type = DeviceType::Strong;
        rec.owner = owner.did;
        expect_committed(f.orch->register_identity(rec, owner_key), "register device");
        f.device_keys.push_back(key);
        f.device_recs.push_back(rec);
    }
    return f;
}

std::vector<double> percentiles(std::vector<double> latencies) {
    // nearest-rank p50/p95/p99 plus mean
    if (latencies.empty()) return {0, 0, 0, 0};
    std::sort(latencies.begin(), latencies.end());
    auto rank = [&](double p) {
        std::size_t idx = static_cast<std::size_t>(
            std::ceil(p * static_cast<double>(latencies.size())));
        return latencies[std::min(idx == 0 ? 0 : idx - 1, latencies.size() - 1)];
    };
    double mean = std::accumulate(latencies.begin(), latencies.end(), 0.0) /
                  static_cast<double>(latencies.size());
    return {mean, rank(0.50), rank(0.95), rank(0.99)};
}

std::uint64_t peak_rss_kb() {
#if defined(__unix__) || defined(__APPLE__)
    rusage usage{};
    if (getrusage(RUSAGE_SELF, &usage) == 0) {
        return static_cast<std::uint64_t>(usage.ru_maxrss);
    }
#endif
    return 0;
}

std::string combine_digests(const std::string& acc, const std::string& next) {
    return crypto::sha256(acc + next).hex();
}

} // namespace

void BenchConfig::validate() const {
    if (send_rates.empty() || parallelism_levels.empty()) {
        throw InvalidConfig("send_rates and parallelism_levels must be non-empty");
    }
    for (int r : send_rates) {
        if (r <= 0) throw InvalidConfig("send rates must be strictly positive");
    }
    for (int p : parallelism_levels) {
        if (p <= 0) throw InvalidConfig("parallelism levels must be strictly positive");
    }
    if (duration_s < 1) throw InvalidConfig("duration_s must be at least 1");
    if (issuer_pool == 0 || device_pool == 0) {
        throw InvalidConfig("issuer_pool and device_pool must be positive");
    }
    if (auth_rtt_ms < 0) throw InvalidConfig("auth_rtt_ms must be non-negative");
}

BenchReport run_issue_throughput(const BenchConfig& config) {
    config.validate();
    BenchReport report;
    report.ledger_digest = "";

    for (int rate : config.send_rates) {
        Fixture f = make_fixture(config, config.mode, config.issuer_pool, config.device_pool);
        const std::size_t n = static_cast<std::size_t>(rate) *
                              static_cast<std::size_t>(config.duration_s);

        // Pre-signed transactions: signing cost stays out of the ledger-side
        // measurement (open-loop load generation).
        std::vector<Transaction> txs;
        txs.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& issuer = f.issuer_for(i, config.mode);
            const auto& key = f.issuer_key_for(i, config.mode);
            const auto& device = f.device_recs[i % f.device_recs.size()];
            VerifiableCredential vc = new_credential(
                issuer, key, device.did,
                {{"model", "bench-device"}, {"serial", std::to_string(i)}}, (*f.clock)());
            txs.push_back(ledger::make_issue_tx(vc, key, (*f.clock)()));
        }

        CounterSnapshot before = CounterSnapshot::take();
        std::vector<double> latencies;
        latencies.reserve(n);
        std::uint64_t committed = 0, rejected = 0;
        auto start = Clock::now();
        for (std::size_t i = 0; i < n; ++i) {
            auto scheduled = start + std::chrono::duration_cast<Clock::duration>(
                                         std::chrono::duration<double>(
                                             static_cast<double>(i) / rate));
            std::this_thread::sleep_until(scheduled);
            auto t0 = Clock::now();
            ledger::Receipt r = f.ledger->submit(txs[i]);
            auto t1 = Clock::now();
            latencies.push_back(ms_between(t0, t1));
            (r.committed ? committed : rejected)++;
        }
        f.ledger->flush();
        auto end = Clock::now();
        CounterSnapshot delta = before.delta(CounterSnapshot::take());

        double wall = std::chrono::duration<double>(end - start).count();
        double elapsed = std::max(wall, static_cast<double>(n) / rate);
        auto pct = percentiles(latencies);

        MeasurementRow row;
        row.mode = ledger::mode_to_string(config.mode);
        row.x = rate;
        row.achieved_tps = static_cast<double>(committed) / elapsed;
        row.mean_ms = pct[0];
        row.p50_ms = pct[1];
        row.p95_ms = pct[2];
        row.p99_ms = pct[3];
        row.committed = committed;
        row.rejected = rejected;
        row.sig_verifications = delta.sig_verifications;
        row.hash_computations = delta.hashes;
        row.wall_s = wall;
        report.rows.push_back(row);

        report.ledger_digest =
            combine_digests(report.ledger_digest, f.ledger->snapshot().digest_hex());
    }
    return report;
}

BenchReport run_auth_latency(const BenchConfig& config) {
    config.validate();
    const std::size_t max_parallel = static_cast<std::size_t>(
        *std::max_element(config.parallelism_levels.begin(), config.parallelism_levels.end()));
    std::size_t n_devices = config.fixture_devices ? config.fixture_devices : max_parallel;
    if (n_devices < max_parallel) {
        throw InsufficientFixture("fixture has " + std::to_string(n_devices) +
                                  " devices, need " + std::to_string(max_parallel));
    }

    Fixture f = make_fixture(config, config.mode, config.issuer_pool, n_devices);
    std::vector<VerifiableCredential> creds;
    creds.reserve(n_devices);
    for (std::size_t i = 0; i < n_devices; ++i) {
        auto [vc, r] = f.orch->issue_device_credential(
            f.issuer_for(i, config.mode), f.issuer_key_for(i, config.mode),
            f.device_recs[i].did, {{"model", "auth-device"}, {"serial", std::to_string(i)}});
        expect_committed(r, "fixture credential");
        creds.push_back(std::move(vc));
    }
    f.ledger->flush();

    BenchReport report;
    std::vector<double> level_means;
    for (std::size_t li = 0; li < config.parallelism_levels.size(); ++li) {
        const std::size_t p = static_cast<std::size_t>(config.parallelism_levels[li]);
        std::vector<orchestrator::AuthenticationChallenge> challenges;
        challenges.reserve(p);
        for (std::size_t i = 0; i < p; ++i) {
            challenges.push_back(f.orch->make_challenge(
                f.man_rec.did, config.seed * 1000003ULL + li * 131ULL + i));
        }

        std::vector<double> latencies(p);
        std::vector<AuthOutcome> outcomes(p, AuthOutcome::CredentialInvalid);
        CounterSnapshot before = CounterSnapshot::take();
        auto wall0 = Clock::now();
        std::vector<std::thread> workers;
        workers.reserve(p);
        for (std::size_t i = 0; i < p; ++i) {
            workers.emplace_back([&, i] {
                auto t0 = Clock::now();
                // request + response over the simulated registry transport
                std::this_thread::sleep_for(std::chrono::milliseconds(config.auth_rtt_ms));
                outcomes[i] = f.orch->authenticate(f.device_keys[i], creds[i], challenges[i]);
                latencies[i] = ms_between(t0, Clock::now());
            });
        }
        for (auto& w : workers) w.join();
        auto wall1 = Clock::now();
        CounterSnapshot delta = before.delta(CounterSnapshot::take());

        auto pct = percentiles(latencies);
        MeasurementRow row;
        row.mode = ledger::mode_to_string(config.mode);
        row.x = static_cast<double>(p);
        double wall = std::chrono::duration<double>(wall1 - wall0).count();
        row.achieved_tps = wall > 0 ? static_cast<double>(p) / wall : 0.0;
        row.mean_ms = pct[0];
        row.p50_ms = pct[1];
        row.p95_ms = pct[2];
        row.p99_ms = pct[3];
        row.committed = static_cast<std::uint64_t>(
            std::count(outcomes.begin(), outcomes.end(), AuthOutcome::Accept));
        row.rejected = p - row.committed;
        row.sig_verifications = delta.sig_verifications;
        row.hash_computations = delta.hashes;
        row.wall_s = wall;
        report.rows.push_back(row);
        level_means.push_back(pct[0]);
    }

    double mean_of_means = std::accumulate(level_means.begin(), level_means.end(), 0.0) /
                           static_cast<double>(level_means.size());
    double var = 0;
    for (double m : level_means) var += (m - mean_of_means) * (m - mean_of_means);
    var /= static_cast<double>(level_means.size());
    report.latency_cv = mean_of_means > 0 ? std::sqrt(var) / mean_of_means : 0.0;
    report.ledger_digest = f.ledger->snapshot().digest_hex();
    return report;
}

BenchReport run_resource_profile(const BenchConfig& config) {
    config.validate();
    BenchReport report;
    const std::size_t n_ops = 100 * static_cast<std::size_t>(config.duration_s);

    std::map<std::string, std::map<std::string, double>> per_mode;
    for (Mode mode : {Mode::Baseline, Mode::Endorsement}) {
        CounterSnapshot before = CounterSnapshot::take();
        auto wall0 = Clock::now();

        // Fixture setup is part of the profiled region: the endorsement
        // mode's extra evidence checks are exactly the overhead under study.
        Fixture f = make_fixture(config, mode, config.issuer_pool, config.device_pool);

        std::vector<double> issue_latencies;
        issue_latencies.reserve(n_ops);
        std::vector<std::string> vc_ids;
        vc_ids.reserve(n_ops);
        std::uint64_t committed = 0, rejected = 0;
        for (std::size_t i = 0; i < n_ops; ++i) {
            const auto& issuer = f.issuer_for(i, mode);
            const auto& key = f.issuer_key_for(i, mode);
            const auto& device = f.device_recs[i % f.device_recs.size()];
            VerifiableCredential vc = new_credential(
                issuer, key, device.did,
                {{"model", "profile-device"}, {"serial", std::to_string(i)}}, (*f.clock)());
            Transaction tx = ledger::make_issue_tx(vc, key, (*f.clock)());
            auto t0 = Clock::now();
            ledger::Receipt r = f.ledger->submit(tx);
            issue_latencies.push_back(ms_between(t0, Clock::now()));
            (r.committed ? committed : rejected)++;
            vc_ids.push_back(vc.vc_id);
        }
        for (std::size_t i = 0; i < n_ops; ++i) {
            ledger::Receipt r = f.ledger->submit(ledger::make_verify_tx(
                vc_ids[i], f.man_rec.did, f.man_key, (*f.clock)()));
            (r.committed ? committed : rejected)++;
        }
        f.ledger->flush();

        auto wall1 = Clock::now();
        CounterSnapshot delta = before.delta(CounterSnapshot::take());
        auto pct = percentiles(issue_latencies);

        MeasurementRow row;
        row.mode = ledger::mode_to_string(mode);
        row.x = static_cast<double>(n_ops);
        double wall = std::chrono::duration<double>(wall1 - wall0).count();
        row.achieved_tps = wall > 0 ? static_cast<double>(committed) / wall : 0.0;
        row.mean_ms = pct[0];
        row.p50_ms = pct[1];
        row.p95_ms = pct[2];
        row.p99_ms = pct[3];
        row.committed = committed;
        row.rejected = rejected;
        row.sig_verifications = delta.sig_verifications;
        row.hash_computations = delta.hashes;
        row.wall_s = wall;
        report.rows.push_back(row);

        auto& m = per_mode[row.mode];
        m["signature_verifications"] = static_cast<double>(delta.sig_verifications);
        m["hash_computations"] = static_cast<double>(delta.hashes);
        m["signatures_created"] = static_cast<double>(delta.signatures);
        m["wall_s"] = wall;
        if (mode == Mode::Endorsement) {
            report.mean_issue_latency_endorsement_ms = pct[0];
        } else {
            report.mean_issue_latency_baseline_ms = pct[0];
        }
        report.ledger_digest =
            combine_digests(report.ledger_digest, f.ledger->snapshot().digest_hex());
    }

    const auto& base = per_mode["baseline"];
    const auto& endo = per_mode["endorsement"];
    for (const auto& [counter, value] : endo) {
        double b = base.at(counter);
        report.counter_ratios[counter] = b > 0 ? value / b : 0.0;
    }
    report.peak_rss_kb = peak_rss_kb();
    return report;
}

// --- Output files ----------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw InvalidConfig("cannot write " + path);
    }
    return out;
}

void write_rows(std::ofstream& out, const std::string& x_name,
                const std::vector<MeasurementRow>& rows) {
    out << "mode," << x_name
        << ",achieved_tps,mean_ms,p50_ms,p95_ms,p99_ms,committed,rejected,"
           "sig_verifications,hash_computations,wall_s\n";
    for (const auto& r : rows) {
        out << r.mode << ',' << r.x << ',' << r.achieved_tps << ',' << r.mean_ms << ','
            << r.p50_ms << ',' << r.p95_ms << ',' << r.p99_ms << ',' << r.committed << ','
            << r.rejected << ',' << r.sig_verifications << ',' << r.hash_computations << ','
            << r.wall_s << '\n';
    }
}

} // namespace

void write_throughput_csv(const BenchReport& report, const std::string& path) {
    auto out = open_out(path);
    write_rows(out, "target_rate_tps", report.rows);
}

void write_latency_csv(const BenchReport& report, const std::string& path) {
    auto out = open_out(path);
    write_rows(out, "parallelism", report.rows);
    out << "# latency_cv," << report.latency_cv << '\n';
}

void write_resource_csv(const BenchReport& report, const std::string& path) {
    auto out = open_out(path);
    write_rows(out, "operations", report.rows);
    for (const auto& [counter, ratio] : report.counter_ratios) {
        out << "ratio_endorsement_over_baseline," << counter << ',' << ratio << '\n';
    }
    out << "mean_issue_latency_ms,baseline," << report.mean_issue_latency_baseline_ms << '\n';
    out << "mean_issue_latency_ms,endorsement," << report.mean_issue_latency_endorsement_ms
        << '\n';
    out << "peak_rss_kb,process," << report.peak_rss_kb << '\n';
}

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series) {
    const double w = 640, h = 420, ml = 70, mr = 30, mt = 50, mb = 60;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (xmax == xmin) xmax = xmin + 1;
    ymin = std::min(ymin, 0.0);
    if (ymax == ymin) ymax = ymin + 1;
    ymax *= 1.05;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};
    auto out = open_out(path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
        << "' font-family='sans-serif' font-size='12'>\n";
    out << "<rect width='" << w << "' height='" << h << "' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='15'>" << title
        << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    out << "<text x='" << w / 2 << "' y='" << h - 16 << "' text-anchor='middle'>" << x_label
        << "</text>\n";
    out << "<text x='18' y='" << h / 2 << "' text-anchor='middle' transform='rotate(-90 18 "
        << h / 2 << ")'>" << y_label << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        double y = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x='" << ml - 8 << "' y='" << py(y) + 4 << "' text-anchor='end'>" << y
            << "</text>\n";
        double x = xmin + (xmax - xmin) * i / 4.0;
        out << "<text x='" << px(x) << "' y='" << h - mb + 18 << "' text-anchor='middle'>" << x
            << "</text>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = colors[si % 4];
        out << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
        for (auto [x, y] : s.points) {
            out << px(x) << ',' << py(y) << ' ';
        }
        out << "'/>\n";
        for (auto [x, y] : s.points) {
            out << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='3' fill='" << color
                << "'/>\n";
        }
        out << "<text x='" << w - mr - 150 << "' y='" << mt + 16 * static_cast<double>(si)
            << "' fill='" << color << "'>" << s.name << "</text>\n";
    }
    out << "</svg>\n";
}

void write_outputs(const BenchReport& report, const BenchConfig& config,
                   const std::string& kind) {
    if (config.out_dir.empty()) return;
    std::filesystem::create_directories(config.out_dir);
    const std::string base = config.out_dir + "/" + kind;

    std::map<std::string, ChartSeries> by_mode;
    for (const auto& r : report.rows) {
        auto& s = by_mode[r.mode];
        s.name = r.mode;
    }

    if (kind == "throughput") {
        write_throughput_csv(report, base + ".csv");
        for (const auto& r : report.rows) by_mode[r.mode].points.push_back({r.x, r.achieved_tps});
    } else if (kind == "latency") {
        write_latency_csv(report, base + ".csv");
        for (const auto& r : report.rows) by_mode[r.mode].points.push_back({r.x, r.mean_ms});
    } else if (kind == "resource") {
        write_resource_csv(report, base + ".csv");
        for (const auto& r : report.rows) {
            by_mode[r.mode].points.push_back(
                {r.x, static_cast<double>(r.sig_verifications)});
        }
    } else {
        throw InvalidConfig("unknown report kind: " + kind);
    }

    std::vector<ChartSeries> series;
    for (auto& [mode, s] : by_mode) series.push_back(std::move(s));
    std::string y = kind == "throughput" ? "achieved throughput (tx/s)"
                    : kind == "latency"  ? "mean latency (ms)"
                                         : "signature verifications";
    std::string x = kind == "latency" ? "parallel requests"
                    : kind == "throughput" ? "target send rate (tx/s)"
                                           : "operations";
    write_line_chart_svg(base + ".svg", kind + " (" + ledger::mode_to_string(config.mode) + ")",
                         x, y, series);
}

} // namespace ssivdr::bench
