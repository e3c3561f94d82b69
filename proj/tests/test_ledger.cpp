#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ssivdr/errors.hpp"
#include "ssivdr/ledger.hpp"

#include "random_graph.hpp"
#include "workload.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace ssivdr;
using namespace ssivdr::ledger;
using fixtures::keypair_for;
using fixtures::signed_endorsement;

namespace {

struct Net {
    crypto::KeyPair man_key = keypair_for(17, "manufacturer");
    Did man_did{man_key.key_id};
    GenesisConfig genesis;
    Timestamp t = 1'000'000;

    Net(double tau = 0.5, std::size_t batch_limit = 16, Mode mode = Mode::Endorsement) {
        genesis.manufacturers.push_back({man_did, man_key.verification_key});
        genesis.tau = trust::Threshold(tau);
        genesis.batch_limit = batch_limit;
        genesis.mode = mode;
    }

    crypto::KeyPair user_key(const std::string& name) { return keypair_for(17, name); }

    IdentityRecord user_rec(const crypto::KeyPair& k) {
        IdentityRecord r;
        r.did = Did{k.key_id};
        r.role = Role::User;
        r.verification_key = k.verification_key;
        return r;
    }

    IdentityRecord device_rec(const crypto::KeyPair& k, const Did& owner,
                              DeviceType type = DeviceType::Strong) {
        IdentityRecord r;
        r.did = Did{k.key_id};
        r.role = Role::Device;
        r.verification_key = k.verification_key;
        r.device_type = type;
        r.owner = owner;
        return r;
    }

    Receipt register_user(Ledger& l, const crypto::KeyPair& k) {
        return l.submit(make_register_tx(user_rec(k), k, t++));
    }
    Receipt endorse(Ledger& l, const crypto::KeyPair& from, const Did& to, double score,
                    std::optional<double> proxy_min = std::nullopt) {
        auto e = signed_endorsement(from, Did{from.key_id}, to, score, t);
        return l.submit(make_endorse_tx(e, from, t++, proxy_min));
    }
    Receipt onboard(Ledger& l, const crypto::KeyPair& k) {
        auto st = l.snapshot();
        auto linkage = trust::find_trust_linkage(st.graph, Did{k.key_id});
        return l.submit(make_onboard_tx(user_rec(k), linkage, k, t++));
    }
    std::pair<VerifiableCredential, Receipt> issue(Ledger& l, const crypto::KeyPair& issuer,
                                                   const Did& holder,
                                                   std::vector<Claim> claims) {
        auto vc = new_credential(user_rec(issuer), issuer, holder, std::move(claims), t);
        return {vc, l.submit(make_issue_tx(vc, issuer, t++))};
    }
};

std::string temp_path(const std::string& stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

} // namespace

TEST_CASE("genesis state seeds manufacturers as roots") {
    Net n;
    Ledger l(n.genesis);
    auto st = l.snapshot();
    CHECK(st.identities.count(n.man_did.text()) == 1);
    CHECK(st.identities.at(n.man_did.text()).role == Role::Manufacturer);
    CHECK(st.graph.is_root(n.man_did.text()));
    CHECK(st.onboarded.count(n.man_did.text()) == 1);
    CHECK(l.chain_snapshot().empty());
}

TEST_CASE("register validation paths") {
    Net n;
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    auto mallory = n.user_key("mallory");

    CHECK(n.register_user(l, alice).committed);
    CHECK(n.register_user(l, alice).reason == RejectReason::AlreadyRegistered);

    // A register whose DID does not match the key is malformed.
    auto rec = n.user_rec(alice);
    rec.did = Did{mallory.key_id};
    CHECK(l.submit(make_register_tx(rec, mallory, n.t++)).reason ==
          RejectReason::MalformedPayload);

    // Manufacturers cannot be registered post-genesis.
    auto man2 = n.user_key("man2");
    auto man_rec = n.user_rec(man2);
    man_rec.role = Role::Manufacturer;
    CHECK(l.submit(make_register_tx(man_rec, man2, n.t++)).reason ==
          RejectReason::NotAuthorized);

    // Devices need a registered user owner and the owner's signature.
    auto dev = n.user_key("dev");
    auto ghost = n.user_key("ghost");
    CHECK(l.submit(make_register_tx(n.device_rec(dev, Did{ghost.key_id}), ghost, n.t++))
              .reason == RejectReason::UnknownPrincipal);
    CHECK(l.submit(make_register_tx(n.device_rec(dev, Did{alice.key_id}), mallory, n.t++))
              .reason == RejectReason::BadSignature);
    CHECK(l.submit(make_register_tx(n.device_rec(dev, Did{alice.key_id}), alice, n.t++))
              .committed);
}

TEST_CASE("endorse and onboard flow with threshold and linkage checks") {
    Net n(0.5);
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    auto bob = n.user_key("bob");
    REQUIRE(n.register_user(l, alice).committed);
    REQUIRE(n.register_user(l, bob).committed);

    // Onboard without any endorsement: no verifiable linkage exists.
    auto no_linkage =
        l.submit(make_onboard_tx(n.user_rec(alice), trust::TrustPath{{n.man_did, Did{alice.key_id}}, 1.0},
                                 alice, n.t++));
    CHECK(no_linkage.reason == RejectReason::LinkageNotVerifiable);

    REQUIRE(n.endorse(l, n.man_key, Did{alice.key_id}, 0.4).committed);
    auto below = n.onboard(l, alice);
    CHECK(below.reason == RejectReason::BelowThreshold);
    CHECK(below.score == doctest::Approx(0.4));

    REQUIRE(n.endorse(l, n.man_key, Did{alice.key_id}, 0.9).committed); // replaces
    auto ok = n.onboard(l, alice);
    CHECK(ok.committed);
    CHECK(ok.score == doctest::Approx(0.9));
    CHECK(n.onboard(l, alice).reason == RejectReason::AlreadyOnboarded);

    // A forged linkage score is ignored: the chain itself must verify.
    trust::TrustPath fake{{n.man_did, Did{bob.key_id}}, 0.99};
    CHECK(l.submit(make_onboard_tx(n.user_rec(bob), fake, bob, n.t++)).reason ==
          RejectReason::LinkageNotVerifiable);

    // Onboarding through a proxy anchor.
    auto carol = n.user_key("carol");
    REQUIRE(n.register_user(l, carol).committed);
    REQUIRE(n.endorse(l, n.man_key, Did{carol.key_id}, 0.95, 0.5).committed); // proxy
    REQUIRE(n.onboard(l, carol).committed);
    auto dave = n.user_key("dave");
    REQUIRE(n.register_user(l, dave).committed);
    REQUIRE(n.endorse(l, carol, Did{dave.key_id}, 0.8).committed);
    auto via_proxy = n.onboard(l, dave);
    CHECK(via_proxy.committed);
    CHECK(via_proxy.score == doctest::Approx(0.95 * 0.8));
}

TEST_CASE("issue requires onboarding and live trust above threshold") {
    Net n(0.5);
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    auto dev = n.user_key("dev");
    REQUIRE(n.register_user(l, alice).committed);
    REQUIRE(l.submit(make_register_tx(n.device_rec(dev, Did{alice.key_id}), alice, n.t++))
                .committed);

    auto [vc0, r0] = n.issue(l, alice, Did{dev.key_id}, {{"model", "a"}});
    CHECK(r0.reason == RejectReason::NotOnboarded);

    REQUIRE(n.endorse(l, n.man_key, Did{alice.key_id}, 0.9).committed);
    REQUIRE(n.onboard(l, alice).committed);
    auto [vc1, r1] = n.issue(l, alice, Did{dev.key_id}, {{"model", "a"}});
    CHECK(r1.committed);
    CHECK(l.query_credential(vc1.vc_id) == VerifyOutcome::Valid);

    // Resubmitting the same credential is a duplicate.
    auto r2 = l.submit(make_issue_tx(vc1, alice, n.t++));
    CHECK(r2.reason == RejectReason::DuplicateCredential);

    // Unknown holder.
    auto ghost = n.user_key("ghost");
    auto [vc3, r3] = n.issue(l, alice, Did{ghost.key_id}, {{"model", "b"}});
    CHECK(r3.reason == RejectReason::UnknownHolder);

    // Endorsement drops below the threshold: authorization follows live trust.
    REQUIRE(n.endorse(l, n.man_key, Did{alice.key_id}, 0.2).committed);
    auto [vc4, r4] = n.issue(l, alice, Did{dev.key_id}, {{"model", "c"}});
    CHECK(r4.reason == RejectReason::TrustBelowThreshold);
}

TEST_CASE("issue payload tamper is rejected") {
    Net n;
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    auto dev = n.user_key("dev");
    REQUIRE(n.register_user(l, alice).committed);
    REQUIRE(l.submit(make_register_tx(n.device_rec(dev, Did{alice.key_id}), alice, n.t++))
                .committed);
    REQUIRE(n.endorse(l, n.man_key, Did{alice.key_id}, 0.9).committed);
    REQUIRE(n.onboard(l, alice).committed);

    auto vc = new_credential(n.user_rec(alice), alice, Did{dev.key_id}, {{"model", "x"}}, n.t);
    SUBCASE("wrong vc_id") {
        vc.vc_id[0] = vc.vc_id[0] == '0' ? '1' : '0';
        CHECK(l.submit(make_issue_tx(vc, alice, n.t++)).reason == RejectReason::MalformedPayload);
    }
    SUBCASE("claim flipped after signing") {
        for (auto& c : vc.claims) {
            if (c.key == "model") c.val = "y";
        }
        vc.vc_id = derive_vc_id(vc);
        CHECK(l.submit(make_issue_tx(vc, alice, n.t++)).reason == RejectReason::BadSignature);
    }
}

TEST_CASE("verify logs an event and reports status") {
    Net n;
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    auto dev = n.user_key("dev");
    REQUIRE(n.register_user(l, alice).committed);
    REQUIRE(l.submit(make_register_tx(n.device_rec(dev, Did{alice.key_id}), alice, n.t++))
                .committed);
    REQUIRE(n.endorse(l, n.man_key, Did{alice.key_id}, 0.9).committed);
    REQUIRE(n.onboard(l, alice).committed);
    auto [vc, ri] = n.issue(l, alice, Did{dev.key_id}, {{"model", "x"}});
    REQUIRE(ri.committed);

    auto r = l.submit(make_verify_tx(vc.vc_id, n.man_did, n.man_key, n.t++));
    CHECK(r.committed);
    CHECK(*r.outcome == VerifyOutcome::Valid);
    auto unknown = l.submit(make_verify_tx("00000000000000000000000000000000", n.man_did,
                                           n.man_key, n.t++));
    CHECK(*unknown.outcome == VerifyOutcome::Unknown);
    CHECK(l.snapshot().verification_log.size() == 2);

    // Unregistered verifiers cannot submit.
    auto ghost = n.user_key("ghost");
    CHECK(l.submit(make_verify_tx(vc.vc_id, Did{ghost.key_id}, ghost, n.t++)).reason ==
          RejectReason::UnknownSubmitter);
}

TEST_CASE("revocation authority and absorption") {
    Net n;
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    auto bob = n.user_key("bob");
    auto dev = n.user_key("dev");
    REQUIRE(n.register_user(l, alice).committed);
    REQUIRE(n.register_user(l, bob).committed);
    REQUIRE(l.submit(make_register_tx(n.device_rec(dev, Did{alice.key_id}), alice, n.t++))
                .committed);
    REQUIRE(n.endorse(l, n.man_key, Did{alice.key_id}, 0.9).committed);
    REQUIRE(n.onboard(l, alice).committed);
    auto [vc, ri] = n.issue(l, alice, Did{dev.key_id}, {{"model", "x"}});
    REQUIRE(ri.committed);

    auto revoke_by = [&](const crypto::KeyPair& who) {
        RevocationRecord rec;
        rec.vc_id = vc.vc_id;
        rec.rationale = RevocationRationale::Compromised;
        rec.revoked_at = n.t;
        rec.revoker = Did{who.key_id};
        return l.submit(make_revoke_tx(rec, who, n.t++));
    };

    CHECK(revoke_by(bob).reason == RejectReason::NotAuthorized); // neither issuer nor owner
    CHECK(revoke_by(alice).committed);                           // issuer and owner
    CHECK(l.query_credential(vc.vc_id) == VerifyOutcome::Revoked);
    CHECK(revoke_by(alice).reason == RejectReason::AlreadyRevoked);

    auto r = l.submit(make_verify_tx(vc.vc_id, n.man_did, n.man_key, n.t++));
    CHECK(*r.outcome == VerifyOutcome::Revoked);
}

TEST_CASE("baseline mode restricts issuance to manufacturers and drops endorsements") {
    Net n(0.5, 16, Mode::Baseline);
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    auto dev = n.user_key("dev");
    REQUIRE(n.register_user(l, alice).committed);
    REQUIRE(l.submit(make_register_tx(n.device_rec(dev, Did{alice.key_id}), alice, n.t++))
                .committed);

    CHECK(n.endorse(l, n.man_key, Did{alice.key_id}, 0.9).reason ==
          RejectReason::UnsupportedInBaseline);
    auto [vc0, r0] = n.issue(l, alice, Did{dev.key_id}, {{"m", "1"}});
    CHECK(r0.reason == RejectReason::NotOnboarded);

    IdentityRecord man_rec;
    man_rec.did = n.man_did;
    man_rec.role = Role::Manufacturer;
    man_rec.verification_key = n.man_key.verification_key;
    auto vc = new_credential(man_rec, n.man_key, Did{dev.key_id}, {{"m", "1"}}, n.t);
    CHECK(l.submit(make_issue_tx(vc, n.man_key, n.t++)).committed);
}

TEST_CASE("batching: blocks seal at the batch limit, flush seals the rest") {
    Net n(0.5, 2);
    Ledger l(n.genesis);
    auto a = n.user_key("a");
    auto b = n.user_key("b");
    auto c = n.user_key("c");
    REQUIRE(n.register_user(l, a).committed);
    REQUIRE(n.register_user(l, b).committed); // second commit seals block 0
    REQUIRE(n.register_user(l, c).committed); // pending

    auto chain = l.chain_snapshot();
    REQUIRE(chain.size() == 1);
    CHECK(chain[0].height == 0);
    CHECK(chain[0].transactions.size() == 2);
    CHECK(chain[0].prev_hash == crypto::Digest{});

    // Rejected transactions never enter a block.
    CHECK_FALSE(n.register_user(l, a).committed);
    l.flush();
    chain = l.chain_snapshot();
    REQUIRE(chain.size() == 2);
    CHECK(chain[1].height == 1);
    CHECK(chain[1].transactions.size() == 1);
    CHECK(chain[1].prev_hash == chain[0].block_hash);
    CHECK_FALSE(verify_chain_integrity(chain).has_value());
}

TEST_CASE("submit_atomic is all-or-nothing") {
    Net n;
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    auto bob = n.user_key("bob");

    auto good1 = make_register_tx(n.user_rec(alice), alice, n.t++);
    auto bad = make_register_tx(n.user_rec(alice), alice, n.t++); // duplicate inside group
    auto good2 = make_register_tx(n.user_rec(bob), bob, n.t++);

    auto before = l.snapshot().digest_hex();
    auto receipts = l.submit_atomic({good1, bad, good2});
    REQUIRE(receipts.size() >= 2);
    CHECK_FALSE(receipts[1].committed);
    CHECK(l.snapshot().digest_hex() == before); // nothing applied

    auto ok = l.submit_atomic({good1, good2});
    CHECK(ok[0].committed);
    CHECK(ok[1].committed);
    CHECK(l.snapshot().identities.count(Did{bob.key_id}.text()) == 1);
}

TEST_CASE("chain integrity detects every kind of in-memory tamper") {
    Net n(0.5, 2);
    Ledger l(n.genesis);
    for (const auto& name : {"a", "b", "c", "d"}) {
        REQUIRE(n.register_user(l, n.user_key(name)).committed);
    }
    l.flush();
    auto chain = l.chain_snapshot();
    REQUIRE(chain.size() == 2);
    REQUIRE_FALSE(verify_chain_integrity(chain).has_value());

    SUBCASE("payload byte") {
        chain[1].transactions[0].payload["record"]["role"] = "device";
        CHECK(verify_chain_integrity(chain) == 1);
    }
    SUBCASE("signature byte") {
        chain[0].transactions[0].signature.bytes[3] ^= 0x10;
        CHECK(verify_chain_integrity(chain) == 0);
    }
    SUBCASE("timestamp") {
        chain[0].transactions[1].timestamp += 1;
        CHECK(verify_chain_integrity(chain) == 0);
    }
    SUBCASE("prev hash linkage") {
        chain[1].prev_hash.bytes[0] ^= 0x01;
        CHECK(verify_chain_integrity(chain) == 1);
    }
    SUBCASE("height") {
        chain[1].height = 7;
        CHECK(verify_chain_integrity(chain) == 1);
    }
}

TEST_CASE("replay rebuilds the exact live state") {
    auto stats = fixtures::run_lifecycle_workload(2024, 200, 0.5, 2);
    CHECK(stats.violations.empty());
    CHECK(stats.committed > 0);
    CHECK(stats.rejected > 0);
}

TEST_CASE("ledger file round trip, audit and tamper detection") {
    Net n(0.5, 4);
    Ledger l(n.genesis);
    auto alice = n.user_key("alice");
    REQUIRE(n.register_user(l, alice).committed);
    REQUIRE(n.endorse(l, n.man_key, Did{alice.key_id}, 0.9).committed);
    REQUIRE(n.onboard(l, alice).committed);
    l.flush();

    std::string path = temp_path("ssivdr_test_ledger.log");
    l.save(path);

    auto audit = audit_ledger_file(path);
    CHECK(audit.intact);

    Ledger reloaded = Ledger::load(path, n.genesis);
    CHECK(reloaded.snapshot().digest_hex() == l.snapshot().digest_hex());
    CHECK(reloaded.chain_snapshot().size() == l.chain_snapshot().size());

    // Flip one byte in the middle of the file: audit must fail.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekg(0, std::ios::end);
        auto size = static_cast<long>(f.tellg());
        f.seekp(size / 2);
        char c = 0;
        f.seekg(size / 2);
        f.get(c);
        f.seekp(size / 2);
        f.put(c == 'x' ? 'y' : 'x');
    }
    CHECK_FALSE(audit_ledger_file(path).intact);
    std::remove(path.c_str());
}

TEST_CASE("malformed payloads reject instead of throwing") {
    Net n;
    Ledger l(n.genesis);
    Transaction tx;
    tx.kind = TxKind::Issue;
    tx.payload = Json{{"credential", "not an object"}};
    tx.timestamp = 1;
    tx.tx_id = Transaction::derive_tx_id(tx.payload);
    CHECK(l.submit(tx).reason == RejectReason::MalformedPayload);
}
