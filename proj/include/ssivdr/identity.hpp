#pragma once

#include "ssivdr/crypto.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ssivdr {

using Json = nlohmann::json;
using Timestamp = std::int64_t; // milliseconds since Unix epoch

inline constexpr const char* kDidMethod = "ssivdr";
inline constexpr const char* kFormatVersion = "1";
inline constexpr const char* kHolderClaimKey = "holder_did";

/// did:ssivdr:<id> where <id> is the key_id of the principal's keypair.
struct DecentralizedIdentifier {
    std::string id; // 32 lowercase hex chars

    std::string text() const { return std::string("did:") + kDidMethod + ":" + id; }
    bool operator==(const DecentralizedIdentifier&) const = default;
    auto operator<=>(const DecentralizedIdentifier&) const = default;

    static DecentralizedIdentifier from_key(const crypto::PublicKey& key);
    static DecentralizedIdentifier parse(const std::string& text);
};

using Did = DecentralizedIdentifier;

enum class Role { Manufacturer, User, Device };
enum class DeviceType { Strong, Weak };

std::string to_string(Role r);
std::string to_string(DeviceType t);
Role role_from_string(const std::string& s);
DeviceType device_type_from_string(const std::string& s);

struct IdentityRecord {
    Did did;
    Role role = Role::User;
    crypto::PublicKey verification_key{};
    std::optional<DeviceType> device_type; // present iff role == Device
    std::optional<Did> owner;              // present iff role == Device

    bool operator==(const IdentityRecord&) const = default;
};

struct Claim {
    std::string key;
    std::string val;

    bool operator==(const Claim&) const = default;
};

struct VerifiableCredential {
    std::string vc_id; // 32 lowercase hex chars (16 bytes)
    Did issuer;
    Did holder;
    std::vector<Claim> claims; // sorted by key in canonical form
    Timestamp issued_at = 0;
    crypto::Signature signature;

    bool operator==(const VerifiableCredential&) const = default;
};

struct Endorsement {
    Did endorser;
    Did subject;
    double score = 0.0; // in [0,1]
    Timestamp endorsed_at = 0;
    crypto::Signature signature;

    bool operator==(const Endorsement&) const = default;
};

enum class RevocationRationale { Compromised, Stolen, OwnershipTransfer, Other };

struct RevocationRecord {
    std::string vc_id;
    RevocationRationale rationale = RevocationRationale::Other;
    std::string rationale_text; // used when rationale == Other
    Timestamp revoked_at = 0;
    Did revoker;

    bool operator==(const RevocationRecord&) const = default;
};

std::string to_string(RevocationRationale r);
RevocationRationale rationale_from_string(const std::string& s);

// --- Canonical serialization -------------------------------------------
//
// The canonical form is a text map with lexicographically sorted keys, no
// insignificant whitespace, integers in decimal and byte fields as lowercase
// hex. It doubles as the on-disk and on-ledger encoding, versioned with a
// leading "fmt":"1" field. Signature fields are excluded from their own
// signing payload.

Json to_json(const IdentityRecord& r);
Json to_json(const Claim& c);
Json to_json(const VerifiableCredential& vc);
Json to_json(const Endorsement& e);
Json to_json(const RevocationRecord& r);

IdentityRecord identity_record_from_json(const Json& j);
VerifiableCredential credential_from_json(const Json& j);
Endorsement endorsement_from_json(const Json& j);
RevocationRecord revocation_from_json(const Json& j);

std::string canonical_dump(const Json& j);

template <typename T>
std::string canonical_serialize(const T& value) {
    return canonical_dump(to_json(value));
}

/// hex(SHA-256(canonical body without vc_id and signature))[:32].
std::string derive_vc_id(const VerifiableCredential& vc);

/// Signing payload: canonical form with the value's own signature removed.
std::string signing_payload(const VerifiableCredential& vc);
std::string signing_payload(const Endorsement& e);

/// Builds and signs a credential. Injects the holder_did claim when absent,
/// sorts claims by key and derives vc_id from the content digest.
/// Throws DuplicateClaim on repeated claim keys.
VerifiableCredential new_credential(const IdentityRecord& issuer_record,
                                    const crypto::KeyPair& issuer_key, const Did& holder,
                                    std::vector<Claim> claims, Timestamp now);

bool verify_credential_signature(const VerifiableCredential& vc,
                                 const crypto::PublicKey& issuer_key);
bool verify_endorsement_signature(const Endorsement& e, const crypto::PublicKey& endorser_key);

} // namespace ssivdr
