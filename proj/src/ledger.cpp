#include "ssivdr/ledger.hpp"

#include "ssivdr/errors.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>

namespace ssivdr::ledger {

namespace {

std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string header_line() {
    return canonical_dump(Json{{"fmt", kFormatVersion}, {"type", "ssivdr-ledger"}});
}

} // namespace

std::string to_string(TxKind k) {
    switch (k) {
    case TxKind::Register: return "register";
    case TxKind::Endorse: return "endorse";
    case TxKind::Onboard: return "onboard";
    case TxKind::Issue: return "issue";
    case TxKind::Verify: return "verify";
    case TxKind::Revoke: return "revoke";
    }
    throw InvalidValue("bad tx kind");
}

TxKind tx_kind_from_string(const std::string& s) {
    if (s == "register") return TxKind::Register;
    if (s == "endorse") return TxKind::Endorse;
    if (s == "onboard") return TxKind::Onboard;
    if (s == "issue") return TxKind::Issue;
    if (s == "verify") return TxKind::Verify;
    if (s == "revoke") return TxKind::Revoke;
    throw InvalidValue("unknown tx kind: " + s);
}

std::string to_string(RejectReason r) {
    switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::BadSignature: return "BadSignature";
    case RejectReason::MalformedPayload: return "MalformedPayload";
    case RejectReason::UnknownSubmitter: return "UnknownSubmitter";
    case RejectReason::AlreadyRegistered: return "AlreadyRegistered";
    case RejectReason::NotOwner: return "NotOwner";
    case RejectReason::UnknownPrincipal: return "UnknownPrincipal";
    case RejectReason::SelfEndorsement: return "SelfEndorsement";
    case RejectReason::InvalidEndorsement: return "InvalidEndorsement";
    case RejectReason::LinkageNotVerifiable: return "LinkageNotVerifiable";
    case RejectReason::BelowThreshold: return "BelowThreshold";
    case RejectReason::AlreadyOnboarded: return "AlreadyOnboarded";
    case RejectReason::NotOnboarded: return "NotOnboarded";
    case RejectReason::TrustBelowThreshold: return "TrustBelowThreshold";
    case RejectReason::UnknownHolder: return "UnknownHolder";
    case RejectReason::DuplicateCredential: return "DuplicateCredential";
    case RejectReason::UnknownCredential: return "UnknownCredential";
    case RejectReason::NotAuthorized: return "NotAuthorized";
    case RejectReason::AlreadyRevoked: return "AlreadyRevoked";
    case RejectReason::UnsupportedInBaseline: return "UnsupportedInBaseline";
    }
    throw InvalidValue("bad reject reason");
}

std::string to_string(VerifyOutcome o) {
    switch (o) {
    case VerifyOutcome::Valid: return "valid";
    case VerifyOutcome::Unknown: return "Unknown";
    case VerifyOutcome::BadSignature: return "BadSignature";
    case VerifyOutcome::Revoked: return "Revoked";
    }
    throw InvalidValue("bad verify outcome");
}

// --- Transaction ---------------------------------------------------------

std::string Transaction::derive_tx_id(const Json& payload) {
    crypto::Digest d = crypto::sha256(canonical_dump(payload));
    return crypto::to_hex(std::span<const std::uint8_t>(d.bytes.data(), 16));
}

std::string Transaction::signing_payload() const {
    Json j;
    j["fmt"] = kFormatVersion;
    j["kind"] = to_string(kind);
    j["payload"] = payload;
    j["timestamp"] = timestamp;
    return canonical_dump(j);
}

Json Transaction::to_json() const {
    Json j;
    j["fmt"] = kFormatVersion;
    j["kind"] = to_string(kind);
    j["payload"] = payload;
    j["signature"] = signature.hex();
    j["timestamp"] = timestamp;
    j["tx_id"] = tx_id;
    return j;
}

Transaction Transaction::from_json(const Json& j) {
    if (j.at("fmt").get<std::string>() != kFormatVersion) {
        throw InvalidValue("unsupported transaction format");
    }
    Transaction tx;
    tx.tx_id = j.at("tx_id").get<std::string>();
    tx.kind = tx_kind_from_string(j.at("kind").get<std::string>());
    tx.payload = j.at("payload");
    tx.timestamp = j.at("timestamp").get<Timestamp>();
    tx.signature = crypto::Signature::from_hex(j.at("signature").get<std::string>());
    return tx;
}

// --- Block ---------------------------------------------------------------

crypto::Digest Block::compute_hash() const {
    Json txs = Json::array();
    for (const auto& tx : transactions) {
        txs.push_back(tx.to_json());
    }
    Json j;
    j["height"] = height;
    j["prev_hash"] = prev_hash.hex();
    j["transactions"] = txs;
    return crypto::sha256(canonical_dump(j));
}

Json Block::to_json() const {
    Json txs = Json::array();
    for (const auto& tx : transactions) {
        txs.push_back(tx.to_json());
    }
    Json j;
    j["block_hash"] = block_hash.hex();
    j["fmt"] = kFormatVersion;
    j["height"] = height;
    j["prev_hash"] = prev_hash.hex();
    j["transactions"] = txs;
    return j;
}

Block Block::from_json(const Json& j) {
    if (j.at("fmt").get<std::string>() != kFormatVersion) {
        throw InvalidValue("unsupported block format");
    }
    Block b;
    b.height = j.at("height").get<std::uint64_t>();
    auto prev = crypto::from_hex(j.at("prev_hash").get<std::string>());
    auto hash = crypto::from_hex(j.at("block_hash").get<std::string>());
    if (prev.size() != 32 || hash.size() != 32) {
        throw InvalidValue("block hashes must be 32 bytes");
    }
    std::copy(prev.begin(), prev.end(), b.prev_hash.bytes.begin());
    std::copy(hash.begin(), hash.end(), b.block_hash.bytes.begin());
    for (const auto& t : j.at("transactions")) {
        b.transactions.push_back(Transaction::from_json(t));
    }
    if (b.transactions.empty()) {
        throw InvalidValue("block must carry at least one transaction");
    }
    return b;
}

// --- Genesis -------------------------------------------------------------

std::string mode_to_string(Mode m) {
    return m == Mode::Endorsement ? "endorsement" : "baseline";
}

Mode mode_from_string(const std::string& s) {
    if (s == "endorsement") return Mode::Endorsement;
    if (s == "baseline") return Mode::Baseline;
    throw InvalidValue("unknown mode: " + s);
}

Json GenesisConfig::to_json() const {
    Json mans = Json::array();
    for (const auto& m : manufacturers) {
        mans.push_back(Json{{"did", m.did.text()},
                            {"verification_key", crypto::to_hex(m.verification_key)}});
    }
    Json j;
    j["batch_limit"] = batch_limit;
    j["fmt"] = kFormatVersion;
    j["manufacturers"] = mans;
    j["mode"] = mode_to_string(mode);
    j["tau"] = tau.tau;
    return j;
}

GenesisConfig GenesisConfig::from_json(const Json& j) {
    GenesisConfig cfg;
    cfg.batch_limit = j.at("batch_limit").get<std::size_t>();
    if (cfg.batch_limit == 0) {
        throw InvalidValue("batch_limit must be positive");
    }
    cfg.mode = mode_from_string(j.at("mode").get<std::string>());
    cfg.tau = trust::Threshold(j.at("tau").get<double>());
    for (const auto& m : j.at("manufacturers")) {
        Manufacturer man;
        man.did = Did::parse(m.at("did").get<std::string>());
        auto key = crypto::from_hex(m.at("verification_key").get<std::string>());
        if (key.size() != 32) {
            throw InvalidValue("manufacturer key must be 32 bytes");
        }
        std::copy(key.begin(), key.end(), man.verification_key.begin());
        if (man.did.id != crypto::key_id_for(man.verification_key)) {
            throw InvalidValue("manufacturer DID does not match key: " + man.did.text());
        }
        cfg.manufacturers.push_back(man);
    }
    if (cfg.manufacturers.empty()) {
        throw InvalidValue("genesis requires at least one manufacturer");
    }
    return cfg;
}

GenesisConfig GenesisConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidValue("cannot open genesis file: " + path);
    }
    Json j = Json::parse(in);
    return from_json(j);
}

void GenesisConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw InvalidValue("cannot write genesis file: " + path);
    }
    out << canonical_dump(to_json()) << "\n";
}

// --- State ---------------------------------------------------------------

LedgerState LedgerState::genesis(const GenesisConfig& cfg) {
    LedgerState st;
    st.config = cfg;
    for (const auto& m : cfg.manufacturers) {
        IdentityRecord rec;
        rec.did = m.did;
        rec.role = Role::Manufacturer;
        rec.verification_key = m.verification_key;
        st.identities[m.did.text()] = rec;
        st.graph.add_node(m.did, Role::Manufacturer);
        st.onboarded[m.did.text()] = 1.0;
    }
    return st;
}

Json LedgerState::to_json() const {
    Json ids = Json::object();
    for (const auto& [did, rec] : identities) {
        ids[did] = ssivdr::to_json(rec);
    }
    Json creds = Json::object();
    for (const auto& [id, entry] : credentials) {
        Json e;
        e["credential"] = ssivdr::to_json(entry.credential);
        e["status"] = entry.status == CredentialStatus::Active ? "active" : "revoked";
        if (entry.revocation) {
            e["revocation"] = ssivdr::to_json(*entry.revocation);
        }
        creds[id] = e;
    }
    Json edges = Json::array();
    for (const auto& [subject, per_endorser] : graph.incoming) {
        for (const auto& [endorser, e] : per_endorser) {
            edges.push_back(ssivdr::to_json(e));
        }
    }
    Json log = Json::array();
    for (const auto& ev : verification_log) {
        log.push_back(Json{{"at", ev.at},
                           {"outcome", to_string(ev.outcome)},
                           {"vc_id", ev.vc_id},
                           {"verifier", ev.verifier.text()}});
    }
    Json ob = Json::object();
    for (const auto& [did, score] : onboarded) {
        ob[did] = score;
    }
    Json j;
    j["config"] = config.to_json();
    j["credentials"] = creds;
    j["endorsements"] = edges;
    j["fmt"] = kFormatVersion;
    j["identities"] = ids;
    j["onboarded"] = ob;
    j["proxies"] = graph.proxies;
    j["verification_log"] = log;
    return j;
}

std::string LedgerState::digest_hex() const {
    return crypto::sha256(canonical_dump(to_json())).hex();
}

// --- Validation ----------------------------------------------------------

namespace {

Receipt reject(RejectReason reason) {
    return Receipt{false, reason, std::nullopt, 0.0};
}

bool tx_signature_ok(const Transaction& tx, const crypto::PublicKey& key) {
    std::string payload = tx.signing_payload();
    return crypto::verify_signature(as_bytes(payload), tx.signature, key);
}

Receipt apply_register(LedgerState& st, const Transaction& tx) {
    IdentityRecord rec = identity_record_from_json(tx.payload.at("record"));
    if (rec.did.id != crypto::key_id_for(rec.verification_key)) {
        return reject(RejectReason::MalformedPayload);
    }
    if (rec.role == Role::Manufacturer) {
        return reject(RejectReason::NotAuthorized); // manufacturers are genesis-only
    }

    if (rec.role == Role::Device) {
        auto owner_it = st.identities.find(rec.owner->text());
        if (owner_it == st.identities.end() || owner_it->second.role != Role::User) {
            return reject(RejectReason::UnknownPrincipal);
        }
        auto existing = st.identities.find(rec.did.text());
        if (existing != st.identities.end()) {
            // Ownership update: authorized by the current owner.
            const IdentityRecord& old = existing->second;
            if (old.role != Role::Device || old.verification_key != rec.verification_key ||
                old.device_type != rec.device_type) {
                return reject(RejectReason::MalformedPayload);
            }
            auto cur_owner = st.identities.find(old.owner->text());
            if (cur_owner == st.identities.end()) {
                return reject(RejectReason::UnknownSubmitter);
            }
            if (!tx_signature_ok(tx, cur_owner->second.verification_key)) {
                return reject(RejectReason::BadSignature);
            }
            existing->second = rec;
            return Receipt{true, RejectReason::None, std::nullopt, 0.0};
        }
        if (!tx_signature_ok(tx, owner_it->second.verification_key)) {
            return reject(RejectReason::BadSignature);
        }
        st.identities[rec.did.text()] = rec;
        st.graph.add_node(rec.did, rec.role);
        return Receipt{true, RejectReason::None, std::nullopt, 0.0};
    }

    // Users self-register with their self-certifying key.
    if (st.identities.count(rec.did.text())) {
        return reject(RejectReason::AlreadyRegistered);
    }
    if (!tx_signature_ok(tx, rec.verification_key)) {
        return reject(RejectReason::BadSignature);
    }
    st.identities[rec.did.text()] = rec;
    st.graph.add_node(rec.did, rec.role);
    return Receipt{true, RejectReason::None, std::nullopt, 0.0};
}

Receipt apply_endorse(LedgerState& st, const Transaction& tx) {
    if (st.config.mode == Mode::Baseline) {
        return reject(RejectReason::UnsupportedInBaseline);
    }
    Endorsement e = endorsement_from_json(tx.payload.at("endorsement"));
    auto endorser = st.identities.find(e.endorser.text());
    if (endorser == st.identities.end()) {
        return reject(RejectReason::UnknownSubmitter);
    }
    if (endorser->second.role == Role::Device) {
        return reject(RejectReason::NotAuthorized);
    }
    auto subject = st.identities.find(e.subject.text());
    if (subject == st.identities.end()) {
        return reject(RejectReason::UnknownPrincipal);
    }
    if (subject->second.role == Role::Device) {
        return reject(RejectReason::NotAuthorized);
    }
    if (!tx_signature_ok(tx, endorser->second.verification_key)) {
        return reject(RejectReason::BadSignature);
    }

    // Optional proxy designation riding the endorsement (manufacturers only).
    std::optional<double> proxy_min_trust;
    if (tx.payload.contains("designate_proxy_min_trust")) {
        proxy_min_trust = tx.payload.at("designate_proxy_min_trust").get<double>();
    }

    trust::TrustGraph scratch = st.graph;
    try {
        trust::add_endorsement(scratch, e, endorser->second.verification_key);
        if (proxy_min_trust) {
            trust::designate_proxy(scratch, e.endorser, e.subject,
                                   trust::Threshold(*proxy_min_trust));
        }
    } catch (const SelfEndorsement&) {
        return reject(RejectReason::SelfEndorsement);
    } catch (const UnknownPrincipal&) {
        return reject(RejectReason::UnknownPrincipal);
    } catch (const NotAManufacturer&) {
        return reject(RejectReason::NotAuthorized);
    } catch (const ProxyTrustTooLow&) {
        return reject(RejectReason::TrustBelowThreshold);
    } catch (const DomainError&) {
        return reject(RejectReason::InvalidEndorsement);
    }
    st.graph = std::move(scratch);
    return Receipt{true, RejectReason::None, std::nullopt, 0.0};
}

Receipt apply_onboard(LedgerState& st, const Transaction& tx) {
    if (st.config.mode == Mode::Baseline) {
        return reject(RejectReason::UnsupportedInBaseline);
    }
    IdentityRecord rec = identity_record_from_json(tx.payload.at("record"));
    trust::TrustPath linkage = trust::TrustPath::from_json(tx.payload.at("linkage"));
    if (rec.did.id != crypto::key_id_for(rec.verification_key)) {
        return reject(RejectReason::MalformedPayload);
    }
    if (rec.role != Role::User) {
        return reject(RejectReason::NotAuthorized);
    }
    auto existing = st.identities.find(rec.did.text());
    if (existing != st.identities.end() &&
        existing->second.verification_key != rec.verification_key) {
        return reject(RejectReason::MalformedPayload);
    }
    if (!tx_signature_ok(tx, rec.verification_key)) {
        return reject(RejectReason::BadSignature);
    }
    if (st.onboarded.count(rec.did.text())) {
        return reject(RejectReason::AlreadyOnboarded);
    }

    // Recompute the claimed linkage against our own graph; the claimed
    // score is never trusted.
    if (linkage.chain.size() < 2 || linkage.chain.back() != rec.did) {
        return reject(RejectReason::LinkageNotVerifiable);
    }
    const std::string anchor = linkage.chain.front().text();
    if (!st.graph.is_root(anchor) && !st.graph.proxies.count(anchor)) {
        return reject(RejectReason::LinkageNotVerifiable);
    }
    std::set<std::string> seen;
    for (const auto& node : linkage.chain) {
        if (!seen.insert(node.text()).second) {
            return reject(RejectReason::LinkageNotVerifiable);
        }
    }
    for (std::size_t i = 0; i + 1 < linkage.chain.size(); ++i) {
        if (!st.graph.edge(linkage.chain[i].text(), linkage.chain[i + 1].text())) {
            return reject(RejectReason::LinkageNotVerifiable);
        }
    }

    double score = trust::trust_score(st.graph, rec.did);
    if (score < st.config.tau.tau) {
        Receipt r = reject(RejectReason::BelowThreshold);
        r.score = score;
        return r;
    }

    if (existing == st.identities.end()) {
        st.identities[rec.did.text()] = rec;
        st.graph.add_node(rec.did, rec.role);
    }
    st.onboarded[rec.did.text()] = score;
    return Receipt{true, RejectReason::None, std::nullopt, score};
}

Receipt apply_issue(LedgerState& st, const Transaction& tx) {
    VerifiableCredential vc = credential_from_json(tx.payload.at("credential"));
    auto issuer = st.identities.find(vc.issuer.text());
    if (issuer == st.identities.end()) {
        return reject(RejectReason::UnknownSubmitter);
    }
    if (!tx_signature_ok(tx, issuer->second.verification_key)) {
        return reject(RejectReason::BadSignature);
    }

    const bool is_manufacturer = issuer->second.role == Role::Manufacturer;
    if (st.config.mode == Mode::Baseline) {
        if (!is_manufacturer) {
            return reject(RejectReason::NotOnboarded);
        }
    } else if (!is_manufacturer) {
        if (!st.onboarded.count(vc.issuer.text())) {
            return reject(RejectReason::NotOnboarded);
        }
        // Live recomputation: endorsement changes propagate to authorization.
        if (trust::trust_score(st.graph, vc.issuer) < st.config.tau.tau) {
            return reject(RejectReason::TrustBelowThreshold);
        }
    }

    if (!st.identities.count(vc.holder.text())) {
        return reject(RejectReason::UnknownHolder);
    }
    if (st.credentials.count(vc.vc_id)) {
        return reject(RejectReason::DuplicateCredential);
    }
    if (vc.vc_id != derive_vc_id(vc)) {
        return reject(RejectReason::MalformedPayload);
    }
    std::set<std::string> keys;
    bool holder_claim = false;
    for (const auto& c : vc.claims) {
        if (!keys.insert(c.key).second) {
            return reject(RejectReason::MalformedPayload);
        }
        if (c.key == kHolderClaimKey && c.val == vc.holder.text()) {
            holder_claim = true;
        }
    }
    if (!holder_claim) {
        return reject(RejectReason::MalformedPayload);
    }
    if (!verify_credential_signature(vc, issuer->second.verification_key)) {
        return reject(RejectReason::BadSignature);
    }

    st.credentials[vc.vc_id] = CredentialEntry{vc, CredentialStatus::Active, std::nullopt};
    return Receipt{true, RejectReason::None, std::nullopt, 0.0};
}

VerifyOutcome evaluate_credential(const LedgerState& st, const std::string& vc_id) {
    auto it = st.credentials.find(vc_id);
    if (it == st.credentials.end()) {
        return VerifyOutcome::Unknown;
    }
    const CredentialEntry& entry = it->second;
    auto issuer = st.identities.find(entry.credential.issuer.text());
    if (issuer == st.identities.end() ||
        !verify_credential_signature(entry.credential, issuer->second.verification_key)) {
        return VerifyOutcome::BadSignature;
    }
    if (entry.status == CredentialStatus::Revoked) {
        return VerifyOutcome::Revoked;
    }
    return VerifyOutcome::Valid;
}

Receipt apply_verify(LedgerState& st, const Transaction& tx) {
    std::string vc_id = tx.payload.at("vc_id").get<std::string>();
    Did verifier = Did::parse(tx.payload.at("verifier").get<std::string>());
    auto v = st.identities.find(verifier.text());
    if (v == st.identities.end()) {
        return reject(RejectReason::UnknownSubmitter);
    }
    if (!tx_signature_ok(tx, v->second.verification_key)) {
        return reject(RejectReason::BadSignature);
    }
    VerifyOutcome outcome = evaluate_credential(st, vc_id);
    st.verification_log.push_back({vc_id, verifier, tx.timestamp, outcome});
    Receipt r{true, RejectReason::None, outcome, 0.0};
    return r;
}

Receipt apply_revoke(LedgerState& st, const Transaction& tx) {
    RevocationRecord rec = revocation_from_json(tx.payload.at("revocation"));
    auto revoker = st.identities.find(rec.revoker.text());
    if (revoker == st.identities.end()) {
        return reject(RejectReason::UnknownSubmitter);
    }
    if (!tx_signature_ok(tx, revoker->second.verification_key)) {
        return reject(RejectReason::BadSignature);
    }
    auto it = st.credentials.find(rec.vc_id);
    if (it == st.credentials.end()) {
        return reject(RejectReason::UnknownCredential);
    }
    if (it->second.status == CredentialStatus::Revoked) {
        return reject(RejectReason::AlreadyRevoked);
    }

    // Authority: the credential's issuer, or the registered owner of the
    // holder device.
    const VerifiableCredential& vc = it->second.credential;
    bool authorized = rec.revoker == vc.issuer;
    if (!authorized) {
        auto holder = st.identities.find(vc.holder.text());
        if (holder != st.identities.end() && holder->second.role == Role::Device &&
            holder->second.owner && *holder->second.owner == rec.revoker) {
            authorized = true;
        }
    }
    if (!authorized) {
        return reject(RejectReason::NotAuthorized);
    }

    it->second.status = CredentialStatus::Revoked;
    it->second.revocation = rec;
    return Receipt{true, RejectReason::None, std::nullopt, 0.0};
}

} // namespace

Receipt apply_transaction(LedgerState& state, const Transaction& tx) {
    try {
        if (tx.tx_id != Transaction::derive_tx_id(tx.payload)) {
            return reject(RejectReason::MalformedPayload);
        }
        switch (tx.kind) {
        case TxKind::Register: return apply_register(state, tx);
        case TxKind::Endorse: return apply_endorse(state, tx);
        case TxKind::Onboard: return apply_onboard(state, tx);
        case TxKind::Issue: return apply_issue(state, tx);
        case TxKind::Verify: return apply_verify(state, tx);
        case TxKind::Revoke: return apply_revoke(state, tx);
        }
        return reject(RejectReason::MalformedPayload);
    } catch (const Json::exception&) {
        return reject(RejectReason::MalformedPayload);
    } catch (const DomainError&) {
        return reject(RejectReason::MalformedPayload);
    }
}

// --- Chain ---------------------------------------------------------------

std::optional<std::uint64_t> verify_chain_integrity(const std::vector<Block>& chain) {
    crypto::Digest prev; // zeros
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Block& b = chain[i];
        if (b.height != i) return i;
        if (b.prev_hash != prev) return i;
        for (const auto& tx : b.transactions) {
            if (tx.tx_id != Transaction::derive_tx_id(tx.payload)) return i;
        }
        if (b.compute_hash() != b.block_hash) return i;
        prev = b.block_hash;
    }
    return std::nullopt;
}

LedgerState replay(const std::vector<Block>& chain, const GenesisConfig& cfg) {
    if (auto broken = verify_chain_integrity(chain)) {
        throw IntegrityViolation("chain broken at height " + std::to_string(*broken));
    }
    LedgerState st = LedgerState::genesis(cfg);
    for (const auto& block : chain) {
        for (const auto& tx : block.transactions) {
            Receipt r = apply_transaction(st, tx);
            if (!r.committed) {
                throw IntegrityViolation("replay divergence: sealed tx " + tx.tx_id +
                                         " rejected with " + to_string(r.reason));
            }
        }
    }
    return st;
}

// --- Ledger --------------------------------------------------------------

Ledger::Ledger(GenesisConfig cfg)
    : config_(std::move(cfg)), state_(LedgerState::genesis(config_)) {}

Ledger::Ledger(Ledger&& other) noexcept
    : config_(std::move(other.config_)),
      state_(std::move(other.state_)),
      chain_(std::move(other.chain_)),
      pending_(std::move(other.pending_)) {}

Receipt Ledger::submit(const Transaction& tx) {
    std::unique_lock lock(mutex_);
    Receipt r = apply_transaction(state_, tx);
    if (r.committed) {
        pending_.push_back(tx);
        if (pending_.size() >= config_.batch_limit) {
            seal_locked();
        }
    }
    return r;
}

std::vector<Receipt> Ledger::submit_atomic(const std::vector<Transaction>& txs) {
    std::unique_lock lock(mutex_);
    LedgerState scratch = state_;
    std::vector<Receipt> receipts;
    receipts.reserve(txs.size());
    bool ok = true;
    for (const auto& tx : txs) {
        Receipt r = apply_transaction(scratch, tx);
        ok = ok && r.committed;
        receipts.push_back(r);
        if (!ok) break;
    }
    if (!ok) {
        return receipts;
    }
    state_ = std::move(scratch);
    // Keep the group inside a single block when it fits.
    if (!pending_.empty() && pending_.size() + txs.size() > config_.batch_limit) {
        seal_locked();
    }
    for (const auto& tx : txs) {
        pending_.push_back(tx);
        if (pending_.size() >= config_.batch_limit) {
            seal_locked();
        }
    }
    return receipts;
}

void Ledger::flush() {
    std::unique_lock lock(mutex_);
    seal_locked();
}

void Ledger::seal_locked() {
    if (pending_.empty()) return;
    Block b;
    b.height = chain_.size();
    if (!chain_.empty()) {
        b.prev_hash = chain_.back().block_hash;
    }
    b.transactions = std::move(pending_);
    pending_.clear();
    b.block_hash = b.compute_hash();
    chain_.push_back(std::move(b));
}

VerifyOutcome Ledger::query_credential(const std::string& vc_id) const {
    std::shared_lock lock(mutex_);
    return evaluate_credential(state_, vc_id);
}

LedgerState Ledger::snapshot() const {
    std::shared_lock lock(mutex_);
    return state_;
}

std::vector<Block> Ledger::chain_snapshot() const {
    std::shared_lock lock(mutex_);
    return chain_;
}

void Ledger::save(const std::string& path) const {
    std::shared_lock lock(mutex_);
    write_ledger_file(path, chain_);
}

Ledger Ledger::load(const std::string& path, const GenesisConfig& cfg) {
    Ledger l(cfg);
    l.chain_ = read_ledger_file(path);
    l.state_ = replay(l.chain_, cfg);
    return l;
}

// --- Persistence ---------------------------------------------------------

void write_ledger_file(const std::string& path, const std::vector<Block>& chain) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw InvalidValue("cannot write ledger file: " + path);
    }
    out << header_line() << "\n";
    for (const auto& b : chain) {
        out << canonical_dump(b.to_json()) << "\n";
    }
}

std::vector<Block> read_ledger_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidValue("cannot open ledger file: " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line != header_line()) {
        throw IntegrityViolation("missing or corrupt ledger header");
    }
    std::vector<Block> chain;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        chain.push_back(Block::from_json(Json::parse(line)));
    }
    return chain;
}

AuditResult audit_ledger_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidValue("cannot open ledger file: " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line != header_line()) {
        return {false, 0};
    }
    std::vector<Block> chain;
    std::uint64_t height = 0;
    while (std::getline(in, line)) {
        try {
            Json j = Json::parse(line);
            Block b = Block::from_json(j);
            // The reconstructed block must re-encode to the exact line, so
            // unknown keys, non-canonical forms and any semantic change in
            // fields a lenient parser would ignore all surface here.
            if (canonical_dump(b.to_json()) != line) {
                return {false, height};
            }
            chain.push_back(std::move(b));
        } catch (const std::exception&) {
            return {false, height};
        }
        ++height;
    }
    if (auto broken = verify_chain_integrity(chain)) {
        return {false, *broken};
    }
    return {true, 0};
}

// --- Builders ------------------------------------------------------------

namespace {

Transaction finish_tx(TxKind kind, Json payload, const crypto::KeyPair& signer, Timestamp now) {
    Transaction tx;
    tx.kind = kind;
    tx.payload = std::move(payload);
    tx.timestamp = now;
    tx.tx_id = Transaction::derive_tx_id(tx.payload);
    std::string body = tx.signing_payload();
    tx.signature = crypto::sign(as_bytes(body), signer.signing_key);
    return tx;
}

} // namespace

Transaction make_register_tx(const IdentityRecord& record, const crypto::KeyPair& signer,
                             Timestamp now) {
    return finish_tx(TxKind::Register, Json{{"record", to_json(record)}}, signer, now);
}

Transaction make_endorse_tx(const Endorsement& endorsement, const crypto::KeyPair& signer,
                            Timestamp now, std::optional<double> designate_proxy_min_trust) {
    Json payload{{"endorsement", to_json(endorsement)}};
    if (designate_proxy_min_trust) {
        payload["designate_proxy_min_trust"] = *designate_proxy_min_trust;
    }
    return finish_tx(TxKind::Endorse, std::move(payload), signer, now);
}

Transaction make_onboard_tx(const IdentityRecord& record, const trust::TrustPath& linkage,
                            const crypto::KeyPair& signer, Timestamp now) {
    return finish_tx(TxKind::Onboard,
                     Json{{"record", to_json(record)}, {"linkage", linkage.to_json()}}, signer,
                     now);
}

Transaction make_issue_tx(const VerifiableCredential& vc, const crypto::KeyPair& signer,
                          Timestamp now) {
    return finish_tx(TxKind::Issue, Json{{"credential", to_json(vc)}}, signer, now);
}

Transaction make_verify_tx(const std::string& vc_id, const Did& verifier,
                           const crypto::KeyPair& signer, Timestamp now) {
    return finish_tx(TxKind::Verify, Json{{"vc_id", vc_id}, {"verifier", verifier.text()}},
                     signer, now);
}

Transaction make_revoke_tx(const RevocationRecord& record, const crypto::KeyPair& signer,
                           Timestamp now) {
    return finish_tx(TxKind::Revoke, Json{{"revocation", to_json(record)}}, signer, now);
}

} // namespace ssivdr::ledger
