#include "ssivdr/identity.hpp"

#include "ssivdr/errors.hpp"

#include <algorithm>
#include <set>

namespace ssivdr {

DecentralizedIdentifier DecentralizedIdentifier::from_key(const crypto::PublicKey& key) {
    return {crypto::key_id_for(key)};
}

DecentralizedIdentifier DecentralizedIdentifier::parse(const std::string& text) {
    const std::string prefix = std::string("did:") + kDidMethod + ":";
    if (text.rfind(prefix, 0) != 0) {
        throw InvalidValue("not a " + prefix + " DID: " + text);
    }
    std::string id = text.substr(prefix.size());
    if (id.size() != 32 || id.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw InvalidValue("DID id must be 32 lowercase hex chars: " + text);
    }
    return {id};
}

std::string to_string(Role r) {
    switch (r) {
    case Role::Manufacturer: return "manufacturer";
    case Role::User: return "user";
    case Role::Device: return "device";
    }
    throw InvalidValue("bad role");
}

Role role_from_string(const std::string& s) {
    if (s == "manufacturer") return Role::Manufacturer;
    if (s == "user") return Role::User;
    if (s == "device") return Role::Device;
    throw InvalidValue("unknown role: " + s);
}

std::string to_string(DeviceType t) {
    return t == DeviceType::Strong ? "strong" : "weak";
}

DeviceType device_type_from_string(const std::string& s) {
    if (s == "strong") return DeviceType::Strong;
    if (s == "weak") return DeviceType::Weak;
    throw InvalidValue("unknown device type: " + s);
}

std::string to_string(RevocationRationale r) {
    switch (r) {
    case RevocationRationale::Compromised: return "compromised";
    case RevocationRationale::Stolen: return "stolen";
    case RevocationRationale::OwnershipTransfer: return "ownership_transfer";
    case RevocationRationale::Other: return "other";
    }
    throw InvalidValue("bad rationale");
}

RevocationRationale rationale_from_string(const std::string& s) {
    if (s == "compromised") return RevocationRationale::Compromised;
    if (s == "stolen") return RevocationRationale::Stolen;
    if (s == "ownership_transfer") return RevocationRationale::OwnershipTransfer;
    if (s == "other") return RevocationRationale::Other;
    throw InvalidValue("unknown rationale: " + s);
}

std::string canonical_dump(const Json& j) {
    // nlohmann::json keeps object keys in std::map order, so dump() already
    // yields sorted keys with no insignificant whitespace.
    return j.dump();
}

Json to_json(const IdentityRecord& r) {
    const bool is_device = r.role == Role::Device;
    if (r.device_type.has_value() != is_device || r.owner.has_value() != is_device) {
        throw InvalidValue("device_type and owner are present iff role is device");
    }
    Json j;
    j["fmt"] = kFormatVersion;
    j["did"] = r.did.text();
    j["role"] = to_string(r.role);
    j["verification_key"] = crypto::to_hex(r.verification_key);
    if (r.role == Role::Device) {
        j["device_type"] = to_string(*r.device_type);
        j["owner"] = r.owner->text();
    }
    return j;
}

IdentityRecord identity_record_from_json(const Json& j) {
    IdentityRecord r;
    r.did = Did::parse(j.at("did").get<std::string>());
    r.role = role_from_string(j.at("role").get<std::string>());
    auto key = crypto::from_hex(j.at("verification_key").get<std::string>());
    if (key.size() != 32) {
        throw InvalidValue("verification_key must be 32 bytes");
    }
    std::copy(key.begin(), key.end(), r.verification_key.begin());
    if (r.role == Role::Device) {
        r.device_type = device_type_from_string(j.at("device_type").get<std::string>());
        r.owner = Did::parse(j.at("owner").get<std::string>());
    } else if (j.contains("device_type") || j.contains("owner")) {
        throw InvalidValue("device_type/owner only valid for devices");
    }
    return r;
}

Json to_json(const Claim& c) {
    if (c.key.empty()) {
        throw InvalidValue("claim key must be non-empty");
    }
    return Json{{"key", c.key}, {"val", c.val}};
}

namespace {

Json credential_body(const VerifiableCredential& vc) {
    Json claims = Json::array();
    for (const auto& c : vc.claims) {
        claims.push_back(to_json(c));
    }
    Json j;
    j["fmt"] = kFormatVersion;
    j["issuer"] = vc.issuer.text();
    j["holder"] = vc.holder.text();
    j["claims"] = claims;
    j["issued_at"] = vc.issued_at;
    return j;
}

} // namespace

std::string derive_vc_id(const VerifiableCredential& vc) {
    crypto::Digest d = crypto::sha256(canonical_dump(credential_body(vc)));
    return crypto::to_hex(std::span<const std::uint8_t>(d.bytes.data(), 16));
}

std::string signing_payload(const VerifiableCredential& vc) {
    Json j = credential_body(vc);
    j["vc_id"] = vc.vc_id;
    return canonical_dump(j);
}

Json to_json(const VerifiableCredential& vc) {
    Json j = credential_body(vc);
    j["vc_id"] = vc.vc_id;
    j["signature"] = vc.signature.hex();
    return j;
}

VerifiableCredential credential_from_json(const Json& j) {
    VerifiableCredential vc;
    vc.vc_id = j.at("vc_id").get<std::string>();
    vc.issuer = Did::parse(j.at("issuer").get<std::string>());
    vc.holder = Did::parse(j.at("holder").get<std::string>());
    vc.issued_at = j.at("issued_at").get<Timestamp>();
    for (const auto& c : j.at("claims")) {
        vc.claims.push_back({c.at("key").get<std::string>(), c.at("val").get<std::string>()});
    }
    if (vc.claims.empty()) {
        throw InvalidValue("credential must carry at least one claim");
    }
    vc.signature = crypto::Signature::from_hex(j.at("signature").get<std::string>());
    return vc;
}

std::string signing_payload(const Endorsement& e) {
    Json j;
    j["fmt"] = kFormatVersion;
    j["endorser"] = e.endorser.text();
    j["subject"] = e.subject.text();
    j["score"] = e.score;
    j["endorsed_at"] = e.endorsed_at;
    return canonical_dump(j);
}

Json to_json(const Endorsement& e) {
    if (e.score < 0.0 || e.score > 1.0) {
        throw InvalidValue("endorsement score must be in [0,1]");
    }
    if (e.endorser == e.subject) {
        throw InvalidValue("endorser and subject must differ");
    }
    Json j;
    j["fmt"] = kFormatVersion;
    j["endorser"] = e.endorser.text();
    j["subject"] = e.subject.text();
    j["score"] = e.score;
    j["endorsed_at"] = e.endorsed_at;
    j["signature"] = e.signature.hex();
    return j;
}

Endorsement endorsement_from_json(const Json& j) {
    Endorsement e;
    e.endorser = Did::parse(j.at("endorser").get<std::string>());
    e.subject = Did::parse(j.at("subject").get<std::string>());
    e.score = j.at("score").get<double>();
    e.endorsed_at = j.at("endorsed_at").get<Timestamp>();
    e.signature = crypto::Signature::from_hex(j.at("signature").get<std::string>());
    if (e.score < 0.0 || e.score > 1.0) {
        throw InvalidValue("endorsement score must be in [0,1]");
    }
    if (e.endorser == e.subject) {
        throw InvalidValue("endorser and subject must differ");
    }
    return e;
}

Json to_json(const RevocationRecord& r) {
    Json j;
    j["fmt"] = kFormatVersion;
    j["vc_id"] = r.vc_id;
    j["rationale"] = to_string(r.rationale);
    if (r.rationale == RevocationRationale::Other) {
        if (r.rationale_text.empty()) {
            throw InvalidValue("rationale 'other' requires text");
        }
        j["rationale_text"] = r.rationale_text;
    }
    j["revoked_at"] = r.revoked_at;
    j["revoker"] = r.revoker.text();
    return j;
}

RevocationRecord revocation_from_json(const Json& j) {
    RevocationRecord r;
    r.vc_id = j.at("vc_id").get<std::string>();
    r.rationale = rationale_from_string(j.at("rationale").get<std::string>());
    if (r.rationale == RevocationRationale::Other) {
        r.rationale_text = j.at("rationale_text").get<std::string>();
    }
    r.revoked_at = j.at("revoked_at").get<Timestamp>();
    r.revoker = Did::parse(j.at("revoker").get<std::string>());
    return r;
}

VerifiableCredential new_credential(const IdentityRecord& issuer_record,
                                    const crypto::KeyPair& issuer_key, const Did& holder,
                                    std::vector<Claim> claims, Timestamp now) {
    if (issuer_record.did.id != issuer_key.key_id) {
        throw InvalidKey("issuer key does not match issuer record");
    }
    std::set<std::string> seen;
    for (const auto& c : claims) {
        if (!seen.insert(c.key).second) {
            throw DuplicateClaim(c.key);
        }
        if (c.key == kHolderClaimKey && c.val != holder.text()) {
            throw DuplicateClaim(std::string(kHolderClaimKey) + " conflicts with holder");
        }
    }
    if (!seen.count(kHolderClaimKey)) {
        claims.push_back({kHolderClaimKey, holder.text()});
    }
    std::sort(claims.begin(), claims.end(),
              [](const Claim& a, const Claim& b) { return a.key < b.key; });

    VerifiableCredential vc;
    vc.issuer = issuer_record.did;
    vc.holder = holder;
    vc.claims = std::move(claims);
    vc.issued_at = now;

    std::string body = canonical_dump(credential_body(vc));
    crypto::Digest d = crypto::sha256(body);
    vc.vc_id = crypto::to_hex(std::span<const std::uint8_t>(d.bytes.data(), 16));

    std::string payload = signing_payload(vc);
    vc.signature = crypto::sign(
        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(payload.data()),
                                      payload.size()),
        issuer_key.signing_key);
    return vc;
}

namespace {

bool verify_over(const std::string& payload, const crypto::Signature& sig,
                 const crypto::PublicKey& key) {
    return crypto::verify_signature(
        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(payload.data()),
                                      payload.size()),
        sig, key);
}

} // namespace

bool verify_credential_signature(const VerifiableCredential& vc,
                                 const crypto::PublicKey& issuer_key) {
    return verify_over(signing_payload(vc), vc.signature, issuer_key);
}

bool verify_endorsement_signature(const Endorsement& e, const crypto::PublicKey& endorser_key) {
    return verify_over(signing_payload(e), e.signature, endorser_key);
}

} // namespace ssivdr
