#include "ssivdr/orchestrator.hpp"

#include "ssivdr/errors.hpp"

#include <algorithm>

namespace ssivdr::orchestrator {

using ledger::CredentialStatus;
using ledger::LedgerState;
using ledger::Transaction;
using ledger::VerifyOutcome;

std::string to_string(AuthOutcome o) {
    switch (o) {
    case AuthOutcome::Accept: return "accept";
    case AuthOutcome::Expired: return "Expired";
    case AuthOutcome::BadNonceSignature: return "BadNonceSignature";
    case AuthOutcome::HolderMismatch: return "HolderMismatch";
    case AuthOutcome::CredentialInvalid: return "CredentialInvalid";
    case AuthOutcome::UnboundDevice: return "UnboundDevice";
    }
    throw InvalidValue("bad auth outcome");
}

Orchestrator::Orchestrator(Ledger& ledger, Clock clock)
    : ledger_(ledger), clock_(std::move(clock)), nonce_rng_(std::random_device{}()) {}

Receipt Orchestrator::register_identity(const IdentityRecord& record,
                                        const crypto::KeyPair& signer) {
    return ledger_.submit(ledger::make_register_tx(record, signer, now()));
}

Receipt Orchestrator::endorse(const Did& endorser, const crypto::KeyPair& endorser_key,
                              const Did& subject, double score,
                              std::optional<double> designate_proxy_min_trust) {
    Endorsement e;
    e.endorser = endorser;
    e.subject = subject;
    e.score = score;
    e.endorsed_at = now();
    std::string payload = signing_payload(e);
    e.signature = crypto::sign(
        {reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()},
        endorser_key.signing_key);
    return ledger_.submit(
        ledger::make_endorse_tx(e, endorser_key, now(), designate_proxy_min_trust));
}

Receipt Orchestrator::onboard_issuer(const IdentityRecord& user, const crypto::KeyPair& user_key) {
    LedgerState st = ledger_.snapshot();
    trust::TrustPath linkage = trust::find_trust_linkage(st.graph, user.did);
    return ledger_.submit(ledger::make_onboard_tx(user, linkage, user_key, now()));
}

std::pair<VerifiableCredential, Receipt> Orchestrator::issue_device_credential(
    const IdentityRecord& issuer, const crypto::KeyPair& issuer_key, const Did& holder,
    std::vector<Claim> claims) {
    VerifiableCredential vc = new_credential(issuer, issuer_key, holder, std::move(claims), now());
    Receipt r = ledger_.submit(ledger::make_issue_tx(vc, issuer_key, now()));
    return {std::move(vc), r};
}

Receipt Orchestrator::revoke_credential(const Did& revoker, const crypto::KeyPair& key,
                                        const std::string& vc_id, RevocationRationale rationale,
                                        const std::string& rationale_text) {
    RevocationRecord rec;
    rec.vc_id = vc_id;
    rec.rationale = rationale;
    rec.rationale_text = rationale_text;
    rec.revoked_at = now();
    rec.revoker = revoker;
    return ledger_.submit(ledger::make_revoke_tx(rec, key, now()));
}

AuthenticationChallenge Orchestrator::make_challenge(const Did& verifier,
                                                     std::optional<std::uint64_t> seed) {
    AuthenticationChallenge c;
    c.verifier = verifier;
    c.issued_at = now();
    if (seed) {
        std::mt19937_64 rng(*seed);
        for (auto& b : c.nonce) b = static_cast<std::uint8_t>(rng());
    } else {
        std::lock_guard lock(nonce_mutex_);
        for (auto& b : c.nonce) b = static_cast<std::uint8_t>(nonce_rng_());
    }
    return c;
}

bool Orchestrator::consume_nonce(const AuthenticationChallenge& challenge) {
    std::lock_guard lock(nonce_mutex_);
    return used_nonces_.insert(challenge.nonce_hex()).second;
}

AuthOutcome Orchestrator::authenticate(const crypto::KeyPair& holder_key,
                                       const VerifiableCredential& vc,
                                       const AuthenticationChallenge& challenge) {
    // Single-use rule: a replayed or expired nonce rejects before anything
    // else, and the nonce is consumed either way.
    bool fresh = consume_nonce(challenge);
    if (!fresh || now() > challenge.issued_at + challenge.expiry_ms) {
        return AuthOutcome::Expired;
    }
    if (holder_key.key_id != vc.holder.id) {
        return AuthOutcome::HolderMismatch;
    }
    LedgerState st = ledger_.snapshot();
    auto holder = st.identities.find(vc.holder.text());
    if (holder == st.identities.end()) {
        return AuthOutcome::HolderMismatch;
    }
    crypto::Signature response = crypto::sign(challenge.nonce, holder_key.signing_key);
    if (!crypto::verify_signature(challenge.nonce, response,
                                  holder->second.verification_key)) {
        return AuthOutcome::BadNonceSignature;
    }
    if (ledger_.query_credential(vc.vc_id) != VerifyOutcome::Valid) {
        return AuthOutcome::CredentialInvalid;
    }
    return AuthOutcome::Accept;
}

std::pair<DeviceBinding, Receipt> Orchestrator::bind_weak_device(const Did& owner,
                                                                 const crypto::KeyPair& owner_key,
                                                                 const IdentityRecord& strong,
                                                                 const IdentityRecord& weak) {
    if (strong.role != Role::Device || strong.device_type != DeviceType::Strong ||
        weak.role != Role::Device || weak.device_type != DeviceType::Weak) {
        throw TypeMismatch("binding requires a strong and a weak device");
    }
    LedgerState st = ledger_.snapshot();
    auto check_owned = [&](const IdentityRecord& dev) {
        auto it = st.identities.find(dev.did.text());
        if (it == st.identities.end() || it->second.owner != owner) {
            throw NotOwner(dev.did.text());
        }
    };
    check_owned(strong);
    check_owned(weak);
    auto owner_it = st.identities.find(owner.text());
    if (owner_it == st.identities.end()) {
        throw UnknownPrincipal(owner.text());
    }

    auto [vc, receipt] = issue_device_credential(owner_it->second, owner_key, strong.did,
                                                 {{kBindClaimKey, weak.did.text()}});
    DeviceBinding binding{strong.did, weak.did, owner, vc.issued_at, vc.vc_id};
    return {binding, receipt};
}

AuthOutcome Orchestrator::delegated_authenticate(const crypto::KeyPair& strong_key,
                                                 const DeviceBinding& binding,
                                                 const VerifiableCredential& weak_vc,
                                                 const AuthenticationChallenge& challenge) {
    bool fresh = consume_nonce(challenge);
    if (!fresh || now() > challenge.issued_at + challenge.expiry_ms) {
        return AuthOutcome::Expired;
    }

    LedgerState st = ledger_.snapshot();
    auto entry = st.credentials.find(binding.binding_vc_id);
    if (entry == st.credentials.end() || entry->second.status != CredentialStatus::Active) {
        return AuthOutcome::UnboundDevice;
    }
    const VerifiableCredential& bind_vc = entry->second.credential;
    bool claims_match = bind_vc.holder == binding.strong &&
                        std::any_of(bind_vc.claims.begin(), bind_vc.claims.end(),
                                    [&](const Claim& c) {
                                        return c.key == kBindClaimKey &&
                                               c.val == binding.weak.text();
                                    });
    if (!claims_match || weak_vc.holder != binding.weak) {
        return AuthOutcome::UnboundDevice;
    }

    auto strong_rec = st.identities.find(binding.strong.text());
    if (strong_rec == st.identities.end()) {
        return AuthOutcome::UnboundDevice;
    }
    crypto::Signature response = crypto::sign(challenge.nonce, strong_key.signing_key);
    if (!crypto::verify_signature(challenge.nonce, response,
                                  strong_rec->second.verification_key)) {
        return AuthOutcome::BadNonceSignature;
    }
    if (ledger_.query_credential(weak_vc.vc_id) != VerifyOutcome::Valid) {
        return AuthOutcome::CredentialInvalid;
    }
    return AuthOutcome::Accept;
}

std::pair<VerifiableCredential, Receipt> Orchestrator::transfer_ownership(
    const Did& old_owner, const crypto::KeyPair& old_owner_key, const IdentityRecord& new_owner,
    const crypto::KeyPair& new_owner_key, const IdentityRecord& device) {
    LedgerState st = ledger_.snapshot();
    auto dev_it = st.identities.find(device.did.text());
    if (dev_it == st.identities.end() || dev_it->second.role != Role::Device ||
        dev_it->second.owner != old_owner) {
        throw NotOwner(device.did.text());
    }
    auto new_owner_it = st.identities.find(new_owner.did.text());
    bool onboarded = st.onboarded.count(new_owner.did.text()) != 0;
    if (new_owner_it == st.identities.end() || !onboarded) {
        throw NewOwnerNotOnboarded(new_owner.did.text());
    }

    Timestamp t = now();
    std::vector<Transaction> group;

    // Revoke every active credential held by the device, reusing the
    // newest one's claims for the reissue.
    std::vector<Claim> reissue_claims;
    Timestamp newest = -1;
    for (const auto& [vc_id, entry] : st.credentials) {
        if (entry.status != CredentialStatus::Active ||
            entry.credential.holder != device.did) {
            continue;
        }
        RevocationRecord rev;
        rev.vc_id = vc_id;
        rev.rationale = RevocationRationale::OwnershipTransfer;
        rev.revoked_at = t;
        rev.revoker = old_owner;
        group.push_back(ledger::make_revoke_tx(rev, old_owner_key, t));
        if (entry.credential.issued_at > newest) {
            newest = entry.credential.issued_at;
            reissue_claims.clear();
            for (const auto& c : entry.credential.claims) {
                if (c.key != kHolderClaimKey) reissue_claims.push_back(c);
            }
        }
    }

    IdentityRecord updated = dev_it->second;
    updated.owner = new_owner.did;
    group.push_back(ledger::make_register_tx(updated, old_owner_key, t));

    VerifiableCredential new_vc =
        new_credential(new_owner, new_owner_key, device.did, std::move(reissue_claims), t);
    group.push_back(ledger::make_issue_tx(new_vc, new_owner_key, t));

    std::vector<Receipt> receipts = ledger_.submit_atomic(group);
    Receipt last = receipts.back();
    if (receipts.size() != group.size() || !last.committed) {
        // Batch rejected as a unit; surface the failing receipt.
        return {VerifiableCredential{}, receipts.back()};
    }
    return {std::move(new_vc), last};
}

} // namespace ssivdr::orchestrator
