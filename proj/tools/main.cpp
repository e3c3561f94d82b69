// ssivdr: command-line front end for the endorsement-driven SSI registry.

#include "ssivdr/bench.hpp"
#include "ssivdr/errors.hpp"
#include "ssivdr/orchestrator.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace ssivdr;
using ledger::GenesisConfig;
using ledger::Ledger;
using orchestrator::Orchestrator;

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitUsage = 2;

Timestamp wall_now() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void save_keypair(const crypto::KeyPair& kp, const std::string& path) {
    Json j;
    j["fmt"] = kFormatVersion;
    j["key_id"] = kp.key_id;
    j["signing_key"] = crypto::to_hex(kp.signing_key);
    j["verification_key"] = crypto::to_hex(kp.verification_key);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidValue("cannot write key file: " + path);
    out << canonical_dump(j) << "\n";
}

crypto::KeyPair load_keypair(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidValue("cannot open key file: " + path);
    Json j = Json::parse(in);
    auto sk = crypto::from_hex(j.at("signing_key").get<std::string>());
    if (sk.size() != 32) throw InvalidValue("signing_key must be 32 bytes");
    return crypto::generate_keypair(std::span<const std::uint8_t>(sk));
}

struct LedgerSession {
    std::string ledger_path;
    GenesisConfig genesis;
    std::unique_ptr<Ledger> ledger;
    std::unique_ptr<Orchestrator> orch;

    static LedgerSession open(const std::string& ledger_path, const std::string& genesis_path) {
        LedgerSession s;
        s.ledger_path = ledger_path;
        s.genesis = GenesisConfig::load(genesis_path);
        if (std::filesystem::exists(ledger_path)) {
            s.ledger = std::make_unique<Ledger>(Ledger::load(ledger_path, s.genesis));
        } else {
            s.ledger = std::make_unique<Ledger>(s.genesis);
        }
        s.orch = std::make_unique<Orchestrator>(*s.ledger, wall_now);
        return s;
    }

    void commit() {
        ledger->flush();
        ledger->save(ledger_path);
    }
};

int report_receipt(const ledger::Receipt& r, const std::string& what) {
    if (r.committed) {
        std::cout << what << ": committed";
        if (r.outcome) std::cout << " outcome=" << ledger::to_string(*r.outcome);
        if (r.score > 0) std::cout << " score=" << r.score;
        std::cout << "\n";
        if (r.outcome && *r.outcome != ledger::VerifyOutcome::Valid) return kExitRejected;
        return kExitOk;
    }
    std::cout << what << ": rejected reason=" << ledger::to_string(r.reason) << "\n";
    return kExitRejected;
}

IdentityRecord fetch_identity(const ledger::LedgerState& st, const Did& did) {
    auto it = st.identities.find(did.text());
    if (it == st.identities.end()) throw UnknownPrincipal(did.text());
    return it->second;
}

VerifiableCredential fetch_credential(const ledger::LedgerState& st, const std::string& vc_id) {
    auto it = st.credentials.find(vc_id);
    if (it == st.credentials.end()) throw InvalidValue("unknown credential: " + vc_id);
    return it->second.credential;
}

std::vector<Claim> parse_claims(const std::vector<std::string>& kvs) {
    std::vector<Claim> claims;
    for (const auto& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw InvalidValue("claim must be key=value: " + kv);
        }
        claims.push_back({kv.substr(0, eq), kv.substr(eq + 1)});
    }
    return claims;
}

int run_demo(double tau, std::uint64_t seed);

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Endorsement-driven self-sovereign identity registry"};
    app.require_subcommand(1);

    const char* env_ledger = std::getenv("SSIVDR_LEDGER");
    std::string ledger_path = env_ledger ? env_ledger : "ledger.ssivdr";
    std::string genesis_path = "genesis.json";
    std::string key_path, out_path, subject, holder, vc_id, rationale = "other";
    std::string device_key_path, device_type = "strong", strong_did, weak_did;
    std::string old_key_path, new_key_path, device_did, rationale_text = "unspecified";
    std::string seed_hex, mode_str = "endorsement", out_dir = "bench-out", verifier_did;
    std::vector<std::string> claim_kvs;
    double score = 0.9, tau = 0.5;
    std::optional<double> proxy_min;
    std::uint64_t seed = 7;
    int duration = 5;
    std::vector<int> rates{25, 50, 100, 200};
    std::vector<int> parallel{1, 4, 16, 64};
    bool query_only = false;

    auto add_ledger_opts = [&](CLI::App* cmd) {
        cmd->add_option("--ledger", ledger_path, "ledger file (env SSIVDR_LEDGER)");
        cmd->add_option("--genesis", genesis_path, "genesis configuration file");
    };

    auto* keygen = app.add_subcommand("keygen", "generate an Ed25519 keypair");
    keygen->add_option("--seed", seed_hex, "32-byte hex seed for deterministic keys");
    keygen->add_option("--out", out_path, "key file to write")->required();

    auto* reg = app.add_subcommand("register", "register a user or device identity");
    add_ledger_opts(reg);
    reg->add_option("--key", key_path, "signer key file (self for users, owner for devices)")
        ->required();
    reg->add_option("--device-key", device_key_path, "device key file (registers a device)");
    reg->add_option("--device-type", device_type, "strong|weak");

    auto* endorse = app.add_subcommand("endorse", "endorse an issuer");
    add_ledger_opts(endorse);
    endorse->add_option("--key", key_path)->required();
    endorse->add_option("--subject", subject, "subject DID")->required();
    endorse->add_option("--score", score, "trust level in [0,1]");
    double proxy_min_val = 0;
    auto* proxy_opt =
        endorse->add_option("--designate-proxy", proxy_min_val,
                            "flag subject as proxy issuer if trust >= this threshold");

    auto* onboard = app.add_subcommand("onboard", "onboard as an issuer");
    add_ledger_opts(onboard);
    onboard->add_option("--key", key_path)->required();

    auto* issue = app.add_subcommand("issue", "issue a credential");
    add_ledger_opts(issue);
    issue->add_option("--key", key_path)->required();
    issue->add_option("--holder", holder, "holder DID")->required();
    issue->add_option("--claim", claim_kvs, "claim key=value (repeatable)");

    auto* verify = app.add_subcommand("verify", "verify a credential");
    add_ledger_opts(verify);
    verify->add_option("--key", key_path, "verifier key file")->required();
    verify->add_option("--vc", vc_id, "credential id")->required();
    verify->add_flag("--query", query_only, "read-only query, no on-ledger event");

    auto* revoke = app.add_subcommand("revoke", "revoke a credential");
    add_ledger_opts(revoke);
    revoke->add_option("--key", key_path)->required();
    revoke->add_option("--vc", vc_id)->required();
    revoke->add_option("--rationale", rationale, "compromised|stolen|ownership_transfer|other");
    revoke->add_option("--text", rationale_text, "free text for rationale=other");

    auto* transfer = app.add_subcommand("transfer", "transfer device ownership");
    add_ledger_opts(transfer);
    transfer->add_option("--old-key", old_key_path)->required();
    transfer->add_option("--new-key", new_key_path)->required();
    transfer->add_option("--device", device_did)->required();

    auto* bind = app.add_subcommand("bind", "bind a weak device to a strong one");
    add_ledger_opts(bind);
    bind->add_option("--key", key_path, "owner key")->required();
    bind->add_option("--strong", strong_did)->required();
    bind->add_option("--weak", weak_did)->required();

    auto* auth = app.add_subcommand("auth", "challenge-response authentication");
    add_ledger_opts(auth);
    auth->add_option("--holder-key", key_path)->required();
    auth->add_option("--vc", vc_id)->required();
    auth->add_option("--verifier", verifier_did, "verifier DID (defaults to first manufacturer)");

    auto* bench_cmd = app.add_subcommand("bench", "benchmark harness");
    bench_cmd->require_subcommand(1);
    auto* bt = bench_cmd->add_subcommand("throughput", "issue throughput vs send rate");
    auto* bl = bench_cmd->add_subcommand("latency", "authentication latency vs parallelism");
    auto* br = bench_cmd->add_subcommand("resource", "resource profile, both modes");
    for (CLI::App* b : {bt, bl, br}) {
        b->add_option("--mode", mode_str, "endorsement|baseline");
        b->add_option("--rates", rates, "target send rates, tx/s");
        b->add_option("--parallel", parallel, "parallel request counts");
        b->add_option("--duration", duration, "seconds per measurement point");
        b->add_option("--tau", tau, "trust threshold");
        b->add_option("--seed", seed, "workload seed");
        b->add_option("--out", out_dir, "output directory for CSV and SVG");
    }

    auto* ledger_cmd = app.add_subcommand("ledger", "ledger file operations");
    ledger_cmd->require_subcommand(1);
    auto* linit = ledger_cmd->add_subcommand("init", "write a genesis file");
    linit->add_option("--genesis", genesis_path);
    linit->add_option("--manufacturer-key", key_path, "manufacturer key file")->required();
    linit->add_option("--tau", tau);
    std::size_t batch_limit = 16;
    linit->add_option("--batch-limit", batch_limit);
    linit->add_option("--mode", mode_str);
    auto* laudit = ledger_cmd->add_subcommand("audit", "verify chain integrity");
    add_ledger_opts(laudit);
    auto* lreplay = ledger_cmd->add_subcommand("replay", "rebuild state from the log");
    add_ledger_opts(lreplay);
    auto* lexport = ledger_cmd->add_subcommand("export", "print materialized state");
    add_ledger_opts(lexport);

    auto* demo = app.add_subcommand("demo", "scripted end-to-end lifecycle");
    demo->add_option("--tau", tau);
    demo->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (keygen->parsed()) {
            crypto::KeyPair kp;
            if (!seed_hex.empty()) {
                auto bytes = crypto::from_hex(seed_hex);
                kp = crypto::generate_keypair(std::span<const std::uint8_t>(bytes));
            } else {
                kp = crypto::generate_keypair();
            }
            save_keypair(kp, out_path);
            std::cout << "did: " << Did{kp.key_id}.text() << "\n";
            return kExitOk;
        }

        if (linit->parsed()) {
            crypto::KeyPair kp = load_keypair(key_path);
            GenesisConfig cfg;
            cfg.manufacturers.push_back({Did{kp.key_id}, kp.verification_key});
            cfg.tau = trust::Threshold(tau);
            cfg.batch_limit = batch_limit;
            cfg.mode = ledger::mode_from_string(mode_str);
            cfg.save(genesis_path);
            std::cout << "genesis written to " << genesis_path << "\n";
            return kExitOk;
        }

        if (demo->parsed()) {
            return run_demo(tau, seed);
        }

        if (bt->parsed() || bl->parsed() || br->parsed()) {
            bench::BenchConfig cfg;
            cfg.mode = ledger::mode_from_string(mode_str);
            cfg.send_rates = rates;
            cfg.parallelism_levels = parallel;
            cfg.duration_s = duration;
            cfg.tau = trust::Threshold(tau);
            cfg.seed = seed;
            cfg.out_dir = out_dir;
            bench::BenchReport report;
            std::string kind;
            if (bt->parsed()) {
                kind = "throughput";
                report = bench::run_issue_throughput(cfg);
            } else if (bl->parsed()) {
                kind = "latency";
                report = bench::run_auth_latency(cfg);
            } else {
                kind = "resource";
                report = bench::run_resource_profile(cfg);
            }
            bench::write_outputs(report, cfg, kind);
            for (const auto& r : report.rows) {
                std::cout << r.mode << " x=" << r.x << " tps=" << r.achieved_tps
                          << " mean_ms=" << r.mean_ms << " p95_ms=" << r.p95_ms
                          << " committed=" << r.committed << " rejected=" << r.rejected << "\n";
            }
            if (bl->parsed()) std::cout << "latency_cv=" << report.latency_cv << "\n";
            if (br->parsed()) {
                for (const auto& [c, v] : report.counter_ratios) {
                    std::cout << "ratio " << c << " = " << v << "\n";
                }
            }
            std::cout << "reports written to " << out_dir << "\n";
            return kExitOk;
        }

        if (laudit->parsed()) {
            ledger::AuditResult res = ledger::audit_ledger_file(ledger_path);
            if (res.intact) {
                std::cout << "intact\n";
                return kExitOk;
            }
            std::cout << "broken at height " << res.broken_height << "\n";
            return kExitRejected;
        }

        if (lreplay->parsed()) {
            GenesisConfig cfg = GenesisConfig::load(genesis_path);
            auto chain = ledger::read_ledger_file(ledger_path);
            ledger::LedgerState st = ledger::replay(chain, cfg);
            std::cout << "replayed " << chain.size() << " blocks, state digest "
                      << st.digest_hex() << "\n";
            return kExitOk;
        }

        if (lexport->parsed()) {
            GenesisConfig cfg = GenesisConfig::load(genesis_path);
            auto chain = ledger::read_ledger_file(ledger_path);
            std::cout << canonical_dump(ledger::replay(chain, cfg).to_json()) << "\n";
            return kExitOk;
        }

        // Everything below runs against a persistent ledger session.
        auto session = LedgerSession::open(ledger_path, genesis_path);
        auto st = session.ledger->snapshot();

        if (reg->parsed()) {
            crypto::KeyPair signer = load_keypair(key_path);
            IdentityRecord rec;
            if (!device_key_path.empty()) {
                crypto::KeyPair dev = load_keypair(device_key_path);
                rec.did = Did{dev.key_id};
                rec.role = Role::Device;
                rec.verification_key = dev.verification_key;
                rec.device_type = device_type_from_string(device_type);
                rec.owner = Did{signer.key_id};
            } else {
                rec.did = Did{signer.key_id};
                rec.role = Role::User;
                rec.verification_key = signer.verification_key;
            }
            int rc = report_receipt(session.orch->register_identity(rec, signer),
                                    "register " + rec.did.text());
            session.commit();
            return rc;
        }

        if (endorse->parsed()) {
            crypto::KeyPair signer = load_keypair(key_path);
            if (proxy_opt->count() > 0) proxy_min = proxy_min_val;
            int rc = report_receipt(session.orch->endorse(Did{signer.key_id}, signer,
                                                          Did::parse(subject), score, proxy_min),
                                    "endorse " + subject);
            session.commit();
            return rc;
        }

        if (onboard->parsed()) {
            crypto::KeyPair signer = load_keypair(key_path);
            IdentityRecord rec = fetch_identity(st, Did{signer.key_id});
            int rc = report_receipt(session.orch->onboard_issuer(rec, signer),
                                    "onboard " + rec.did.text());
            session.commit();
            return rc;
        }

        if (issue->parsed()) {
            crypto::KeyPair signer = load_keypair(key_path);
            IdentityRecord issuer = fetch_identity(st, Did{signer.key_id});
            auto [vc, r] = session.orch->issue_device_credential(
                issuer, signer, Did::parse(holder), parse_claims(claim_kvs));
            int rc = report_receipt(r, "issue " + vc.vc_id);
            session.commit();
            return rc;
        }

        if (verify->parsed()) {
            crypto::KeyPair signer = load_keypair(key_path);
            if (query_only) {
                auto outcome = session.ledger->query_credential(vc_id);
                std::cout << "query " << vc_id << ": " << ledger::to_string(outcome) << "\n";
                return outcome == ledger::VerifyOutcome::Valid ? kExitOk : kExitRejected;
            }
            auto tx = ledger::make_verify_tx(vc_id, Did{signer.key_id}, signer, wall_now());
            int rc = report_receipt(session.ledger->submit(tx), "verify " + vc_id);
            session.commit();
            return rc;
        }

        if (revoke->parsed()) {
            crypto::KeyPair signer = load_keypair(key_path);
            int rc = report_receipt(
                session.orch->revoke_credential(Did{signer.key_id}, signer, vc_id,
                                                rationale_from_string(rationale), rationale_text),
                "revoke " + vc_id);
            session.commit();
            return rc;
        }

        if (transfer->parsed()) {
            crypto::KeyPair old_key = load_keypair(old_key_path);
            crypto::KeyPair new_key = load_keypair(new_key_path);
            IdentityRecord new_owner = fetch_identity(st, Did{new_key.key_id});
            IdentityRecord device = fetch_identity(st, Did::parse(device_did));
            auto [vc, r] = session.orch->transfer_ownership(Did{old_key.key_id}, old_key,
                                                            new_owner, new_key, device);
            int rc = report_receipt(r, "transfer " + device_did + " new vc " + vc.vc_id);
            session.commit();
            return rc;
        }

        if (bind->parsed()) {
            crypto::KeyPair owner_key = load_keypair(key_path);
            IdentityRecord strong = fetch_identity(st, Did::parse(strong_did));
            IdentityRecord weak = fetch_identity(st, Did::parse(weak_did));
            auto [binding, r] =
                session.orch->bind_weak_device(Did{owner_key.key_id}, owner_key, strong, weak);
            int rc = report_receipt(r, "bind " + weak_did + " -> " + strong_did + " via vc " +
                                           binding.binding_vc_id);
            session.commit();
            return rc;
        }

        if (auth->parsed()) {
            crypto::KeyPair holder_key = load_keypair(key_path);
            VerifiableCredential vc = fetch_credential(st, vc_id);
            Did verifier = verifier_did.empty() ? session.genesis.manufacturers.front().did
                                                : Did::parse(verifier_did);
            auto challenge = session.orch->make_challenge(verifier);
            auto outcome = session.orch->authenticate(holder_key, vc, challenge);
            std::cout << "auth " << vc_id << ": " << orchestrator::to_string(outcome) << "\n";
            return outcome == orchestrator::AuthOutcome::Accept ? kExitOk : kExitRejected;
        }

        std::cerr << "no subcommand dispatched\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRejected;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

namespace {

int run_demo(double tau_value, std::uint64_t seed) {
    using orchestrator::AuthOutcome;
    std::cout << "=== ssivdr demo (tau=" << tau_value << ", seed=" << seed << ") ===\n";

    auto key_for = [&](const std::string& label) {
        crypto::Digest d = crypto::sha256("demo:" + std::to_string(seed) + ":" + label);
        return crypto::generate_keypair(std::span<const std::uint8_t>(d.bytes));
    };
    auto man_key = key_for("manufacturer");
    auto proxy_key = key_for("proxy");
    auto u1_key = key_for("user1");
    auto u2_key = key_for("user2");
    auto dev_key = key_for("device");

    GenesisConfig genesis;
    genesis.manufacturers.push_back({Did{man_key.key_id}, man_key.verification_key});
    genesis.tau = trust::Threshold(tau_value);
    Ledger reg_ledger(genesis);
    std::int64_t t = 1'700'000'000'000;
    Orchestrator orch(reg_ledger, [&t]() -> Timestamp { return t++; });

    auto user_record = [](const crypto::KeyPair& k) {
        IdentityRecord r;
        r.did = Did{k.key_id};
        r.role = Role::User;
        r.verification_key = k.verification_key;
        return r;
    };
    IdentityRecord proxy_rec = user_record(proxy_key);
    IdentityRecord u1_rec = user_record(u1_key);
    IdentityRecord u2_rec = user_record(u2_key);
    IdentityRecord dev_rec;
    dev_rec.did = Did{dev_key.key_id};
    dev_rec.role = Role::Device;
    dev_rec.verification_key = dev_key.verification_key;
    dev_rec.device_type = DeviceType::Strong;
    dev_rec.owner = u1_rec.did;

    Did man_did{man_key.key_id};
    std::cout << "manufacturer " << man_did.text() << " (root of trust)\n";

    auto step = [](const std::string& what, const ledger::Receipt& r) {
        std::cout << what << " -> "
                  << (r.committed ? "committed" : "rejected: " + ledger::to_string(r.reason));
        if (r.score > 0) std::cout << " (score " << r.score << ")";
        std::cout << "\n";
        if (!r.committed) throw InvalidValue("demo step failed: " + what);
    };

    step("register proxy " + proxy_rec.did.text(),
         orch.register_identity(proxy_rec, proxy_key));
    step("register user1 " + u1_rec.did.text(), orch.register_identity(u1_rec, u1_key));
    step("register user2 " + u2_rec.did.text(), orch.register_identity(u2_rec, u2_key));

    step("manufacturer endorses proxy (0.95, designated proxy)",
         orch.endorse(man_did, man_key, proxy_rec.did, 0.95, 0.5));
    step("onboard proxy", orch.onboard_issuer(proxy_rec, proxy_key));
    step("proxy endorses user1 (0.9)", orch.endorse(proxy_rec.did, proxy_key, u1_rec.did, 0.9));
    step("onboard user1 via proxy linkage", orch.onboard_issuer(u1_rec, u1_key));
    step("manufacturer endorses user2 (0.8)", orch.endorse(man_did, man_key, u2_rec.did, 0.8));
    step("onboard user2", orch.onboard_issuer(u2_rec, u2_key));

    step("user1 registers device " + dev_rec.did.text(),
         orch.register_identity(dev_rec, u1_key));
    auto [vc, issue_r] = orch.issue_device_credential(u1_rec, u1_key, dev_rec.did,
                                                      {{"model", "thermo-x1"}});
    step("user1 issues credential " + vc.vc_id, issue_r);

    auto challenge = orch.make_challenge(man_did, seed);
    AuthOutcome a = orch.authenticate(dev_key, vc, challenge);
    std::cout << "device authenticates -> " << orchestrator::to_string(a) << "\n";

    auto [new_vc, transfer_r] = orch.transfer_ownership(u1_rec.did, u1_key, u2_rec, u2_key,
                                                        dev_rec);
    step("transfer device to user2, new credential " + new_vc.vc_id, transfer_r);
    std::cout << "old credential now: "
              << ledger::to_string(reg_ledger.query_credential(vc.vc_id)) << "\n";

    step("user2 revokes new credential (stolen)",
         orch.revoke_credential(u2_rec.did, u2_key, new_vc.vc_id, RevocationRationale::Stolen));
    std::cout << "new credential now: "
              << ledger::to_string(reg_ledger.query_credential(new_vc.vc_id)) << "\n";

    reg_ledger.flush();
    auto chain = reg_ledger.chain_snapshot();
    auto broken = ledger::verify_chain_integrity(chain);
    std::cout << "chain: " << chain.size() << " blocks, integrity "
              << (broken ? "BROKEN" : "intact") << ", state digest "
              << reg_ledger.snapshot().digest_hex() << "\n";
    std::cout << "=== demo complete ===\n";
    return broken ? kExitRejected : kExitOk;
}

} // namespace
