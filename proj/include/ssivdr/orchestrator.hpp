#pragma once

#include "ssivdr/ledger.hpp"

#include <array>
#include <functional>
#include <mutex>
#include <random>
#include <set>

namespace ssivdr::orchestrator {

using ledger::Ledger;
using ledger::Receipt;

struct AuthenticationChallenge {
    std::array<std::uint8_t, 32> nonce{};
    Did verifier;
    Timestamp issued_at = 0;
    std::int64_t expiry_ms = 30'000;

    std::string nonce_hex() const { return crypto::to_hex(nonce); }
};

enum class AuthOutcome {
    Accept,
    Expired,
    BadNonceSignature,
    HolderMismatch,
    CredentialInvalid,
    UnboundDevice,
};

std::string to_string(AuthOutcome o);

struct DeviceBinding {
    Did strong;
    Did weak;
    Did owner;
    Timestamp bound_at = 0;
    std::string binding_vc_id; // the owner-issued credential carrying the bind claim
};

inline constexpr const char* kBindClaimKey = "binds";

/// Application-layer flows composing the trust engine and the ledger.
/// All state mutation funnels through the ledger's single-writer contract;
/// the nonce registry is the only locally held mutable state.
class Orchestrator {
public:
    using Clock = std::function<Timestamp()>;

    Orchestrator(Ledger& ledger, Clock clock);

    Timestamp now() const { return clock_(); }

    Receipt register_identity(const IdentityRecord& record, const crypto::KeyPair& signer);

    Receipt endorse(const Did& endorser, const crypto::KeyPair& endorser_key, const Did& subject,
                    double score, std::optional<double> designate_proxy_min_trust = std::nullopt);

    /// Discovers the trust linkage, builds and signs the onboard
    /// transaction, submits. Throws NoTrustLinkage when isolated.
    Receipt onboard_issuer(const IdentityRecord& user, const crypto::KeyPair& user_key);

    /// Builds the credential, submits the issue transaction and returns the
    /// committed credential together with the receipt.
    std::pair<VerifiableCredential, Receipt> issue_device_credential(
        const IdentityRecord& issuer, const crypto::KeyPair& issuer_key, const Did& holder,
        std::vector<Claim> claims);

    Receipt revoke_credential(const Did& revoker, const crypto::KeyPair& key,
                              const std::string& vc_id, RevocationRationale rationale,
                              const std::string& rationale_text = {});

    /// Fresh single-use challenge from the verifier's point of view.
    AuthenticationChallenge make_challenge(const Did& verifier,
                                           std::optional<std::uint64_t> seed = std::nullopt);

    /// Nonce-based challenge-response. The holder signs the nonce; the
    /// verifier checks the signature, the credential binding and the
    /// ledger status (read-only query path). Consumes the nonce either way.
    AuthOutcome authenticate(const crypto::KeyPair& holder_key, const VerifiableCredential& vc,
                             const AuthenticationChallenge& challenge);

    /// Binds a weak device to a strong one via an owner-issued credential
    /// carrying the bind claim. Throws DomainError on type or ownership
    /// violations before anything reaches the ledger.
    std::pair<DeviceBinding, Receipt> bind_weak_device(const Did& owner,
                                                       const crypto::KeyPair& owner_key,
                                                       const IdentityRecord& strong,
                                                       const IdentityRecord& weak);

    /// The strong device answers the challenge on the bound weak device's
    /// behalf.
    AuthOutcome delegated_authenticate(const crypto::KeyPair& strong_key,
                                       const DeviceBinding& binding,
                                       const VerifiableCredential& weak_vc,
                                       const AuthenticationChallenge& challenge);

    /// Revoke-and-reissue in one atomic batch: all the device's active
    /// credentials are revoked with rationale ownership_transfer, the owner
    /// field moves and the new owner issues a fresh credential.
    std::pair<VerifiableCredential, Receipt> transfer_ownership(
        const Did& old_owner, const crypto::KeyPair& old_owner_key,
        const IdentityRecord& new_owner, const crypto::KeyPair& new_owner_key,
        const IdentityRecord& device);

    Ledger& ledger() { return ledger_; }

private:
    bool consume_nonce(const AuthenticationChallenge& challenge);

    Ledger& ledger_;
    Clock clock_;
    std::set<std::string> used_nonces_;
    std::mt19937_64 nonce_rng_;
    std::mutex nonce_mutex_;
};

} // namespace ssivdr::orchestrator
