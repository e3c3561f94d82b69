#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssivdr::crypto {

using Bytes = std::vector<std::uint8_t>;

struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    bool operator==(const Digest&) const = default;
    std::string hex() const;
};

enum class SignatureScheme { Ed25519 };

struct Signature {
    SignatureScheme scheme = SignatureScheme::Ed25519;
    std::array<std::uint8_t, 64> bytes{};

    bool operator==(const Signature&) const = default;
    std::string hex() const;
    static Signature from_hex(const std::string& hex);
};

using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 32>;

/// Ed25519 keypair. signing_key is the 32-byte seed; the expanded form
/// is derived on use. key_id is hex(SHA-256(verification_key))[:32].
struct KeyPair {
    std::string key_id;
    SecretKey signing_key{};
    PublicKey verification_key{};
};

/// Deterministic under a fixed seed; fresh system entropy otherwise.
/// Throws InvalidSeed when the seed is present but not 32 bytes.
KeyPair generate_keypair(std::optional<std::span<const std::uint8_t>> seed = std::nullopt);

Signature sign(std::span<const std::uint8_t> message, const SecretKey& signing_key);

/// Malformed inputs reject rather than throw: verification is total.
bool verify_signature(std::span<const std::uint8_t> message, const Signature& sig,
                      const PublicKey& verification_key);

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(const std::string& data);

std::string key_id_for(const PublicKey& verification_key);

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(const std::string& hex);

/// Operation counters used by the benchmark harness as platform-independent
/// resource proxies. Process-wide, thread-safe.
struct OpCounters {
    std::atomic<std::uint64_t> signature_verifications{0};
    std::atomic<std::uint64_t> signatures_created{0};
    std::atomic<std::uint64_t> hash_computations{0};

    void reset() {
        signature_verifications = 0;
        signatures_created = 0;
        hash_computations = 0;
    }
};

OpCounters& counters();

} // namespace ssivdr::crypto
