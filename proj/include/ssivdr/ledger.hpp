#pragma once

#include "ssivdr/trust.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace ssivdr::ledger {

// The four transaction kinds of the credential lifecycle, plus the two
// auxiliary record kinds (register, endorse) every other transaction
// depends on. Keeping them on-chain makes state a pure fold over the log.
enum class TxKind { Register, Endorse, Onboard, Issue, Verify, Revoke };

std::string to_string(TxKind k);
TxKind tx_kind_from_string(const std::string& s);

struct Transaction {
    std::string tx_id; // hex(SHA-256(canonical payload))[:32]
    TxKind kind = TxKind::Register;
    Json payload;
    Timestamp timestamp = 0;
    crypto::Signature signature;

    Json to_json() const;
    static Transaction from_json(const Json& j);
    std::string signing_payload() const;
    static std::string derive_tx_id(const Json& payload);
};

struct Block {
    std::uint64_t height = 0;
    crypto::Digest prev_hash; // 32 zero bytes at height 0
    std::vector<Transaction> transactions;
    crypto::Digest block_hash;

    /// Hash over height, prev_hash and the full canonical transaction
    /// serializations, so any byte of a sealed block is tamper-evident.
    crypto::Digest compute_hash() const;
    Json to_json() const;
    static Block from_json(const Json& j);
};

enum class Mode { Endorsement, Baseline };

std::string mode_to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct GenesisConfig {
    struct Manufacturer {
        Did did;
        crypto::PublicKey verification_key{};
    };
    std::vector<Manufacturer> manufacturers;
    trust::Threshold tau;
    std::size_t batch_limit = 16;
    Mode mode = Mode::Endorsement;

    Json to_json() const;
    static GenesisConfig from_json(const Json& j);
    static GenesisConfig load(const std::string& path);
    void save(const std::string& path) const;
};

enum class RejectReason {
    None,
    BadSignature,
    MalformedPayload,
    UnknownSubmitter,
    AlreadyRegistered,
    NotOwner,
    UnknownPrincipal,
    SelfEndorsement,
    InvalidEndorsement,
    LinkageNotVerifiable,
    BelowThreshold,
    AlreadyOnboarded,
    NotOnboarded,
    TrustBelowThreshold,
    UnknownHolder,
    DuplicateCredential,
    UnknownCredential,
    NotAuthorized,
    AlreadyRevoked,
    UnsupportedInBaseline,
};

std::string to_string(RejectReason r);

enum class VerifyOutcome { Valid, Unknown, BadSignature, Revoked };

std::string to_string(VerifyOutcome o);

struct Receipt {
    bool committed = false;
    RejectReason reason = RejectReason::None;
    std::optional<VerifyOutcome> outcome; // verify transactions only
    double score = 0.0;                   // onboard transactions only
};

enum class CredentialStatus { Active, Revoked };

struct CredentialEntry {
    VerifiableCredential credential;
    CredentialStatus status = CredentialStatus::Active;
    std::optional<RevocationRecord> revocation;
};

struct VerificationEvent {
    std::string vc_id;
    Did verifier;
    Timestamp at = 0;
    VerifyOutcome outcome = VerifyOutcome::Valid;
};

/// Materialized registry state: a pure fold over the transaction log.
struct LedgerState {
    std::map<std::string, IdentityRecord> identities; // DID text -> record
    std::map<std::string, double> onboarded;          // DID text -> score at admission
    std::map<std::string, CredentialEntry> credentials;
    trust::TrustGraph graph;
    std::vector<VerificationEvent> verification_log;
    GenesisConfig config;

    static LedgerState genesis(const GenesisConfig& cfg);
    Json to_json() const;
    std::string digest_hex() const;
};

/// Applies one transaction to the state. Deterministic; mutates state only
/// when the receipt reports committed. Shared by the live ledger and replay.
Receipt apply_transaction(LedgerState& state, const Transaction& tx);

/// Recomputes every tx_id, block hash and prev-hash linkage.
/// Returns the lowest disagreeing height, or nullopt when intact.
std::optional<std::uint64_t> verify_chain_integrity(const std::vector<Block>& chain);

/// Rebuilds state from genesis by re-applying every transaction in order.
/// Throws IntegrityViolation on a broken chain or a replay divergence.
LedgerState replay(const std::vector<Block>& chain, const GenesisConfig& cfg);

/// Single-writer, multi-reader verifiable data registry.
class Ledger {
public:
    explicit Ledger(GenesisConfig cfg);
    Ledger(Ledger&& other) noexcept;
    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;
    Ledger& operator=(Ledger&&) = delete;

    Receipt submit(const Transaction& tx);

    /// All-or-nothing group commit; no partial state on failure.
    std::vector<Receipt> submit_atomic(const std::vector<Transaction>& txs);

    /// Seals the pending batch into a block (no-op when empty).
    void flush();

    /// Read-only fast path: credential status check without an on-ledger
    /// verification event.
    VerifyOutcome query_credential(const std::string& vc_id) const;

    LedgerState snapshot() const;
    std::vector<Block> chain_snapshot() const;
    const GenesisConfig& config() const { return config_; }

    void save(const std::string& path) const;
    static Ledger load(const std::string& path, const GenesisConfig& cfg);

private:
    void seal_locked();

    GenesisConfig config_;
    LedgerState state_;
    std::vector<Block> chain_;
    std::vector<Transaction> pending_;
    mutable std::shared_mutex mutex_;
};

struct AuditResult {
    bool intact = true;
    std::uint64_t broken_height = 0;
};

/// File-level audit: every line must byte-equal its canonical re-encoding
/// and the chain must verify. The header counts as height 0's predecessor;
/// a corrupt header reports height 0.
AuditResult audit_ledger_file(const std::string& path);

std::vector<Block> read_ledger_file(const std::string& path);
void write_ledger_file(const std::string& path, const std::vector<Block>& chain);

// Transaction builders used by the orchestrator and the CLI. Each signs
// with the submitting principal's key.
Transaction make_register_tx(const IdentityRecord& record, const crypto::KeyPair& signer,
                             Timestamp now);
Transaction make_endorse_tx(const Endorsement& endorsement, const crypto::KeyPair& signer,
                            Timestamp now,
                            std::optional<double> designate_proxy_min_trust = std::nullopt);
Transaction make_onboard_tx(const IdentityRecord& record, const trust::TrustPath& linkage,
                            const crypto::KeyPair& signer, Timestamp now);
Transaction make_issue_tx(const VerifiableCredential& vc, const crypto::KeyPair& signer,
                          Timestamp now);
Transaction make_verify_tx(const std::string& vc_id, const Did& verifier,
                           const crypto::KeyPair& signer, Timestamp now);
Transaction make_revoke_tx(const RevocationRecord& record, const crypto::KeyPair& signer,
                           Timestamp now);

} // namespace ssivdr::ledger
