#include "ssivdr/crypto.hpp"

#include "ssivdr/errors.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace ssivdr::crypto {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialization failed");
        }
    });
}

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

} // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) {
        throw InvalidValue("hex string has odd length");
    }
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw InvalidValue("invalid hex digit (lowercase hex required)");
        }
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

std::string Digest::hex() const {
    return to_hex(bytes);
}

std::string Signature::hex() const {
    return to_hex(bytes);
}

Signature Signature::from_hex(const std::string& hex) {
    Bytes raw = ::ssivdr::crypto::from_hex(hex);
    if (raw.size() != 64) {
        throw InvalidValue("signature must be 64 bytes");
    }
    Signature sig;
    std::copy(raw.begin(), raw.end(), sig.bytes.begin());
    return sig;
}

Digest sha256(std::span<const std::uint8_t> data) {
    ensure_sodium();
    counters().hash_computations.fetch_add(1, std::memory_order_relaxed);
    Digest d;
    crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
    return d;
}

Digest sha256(const std::string& data) {
    return sha256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string key_id_for(const PublicKey& verification_key) {
    Digest d = sha256(std::span<const std::uint8_t>(verification_key));
    return to_hex(std::span<const std::uint8_t>(d.bytes.data(), 16));
}

KeyPair generate_keypair(std::optional<std::span<const std::uint8_t>> seed) {
    ensure_sodium();
    std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed_bytes;
    if (seed) {
        if (seed->size() != crypto_sign_SEEDBYTES) {
            throw InvalidSeed();
        }
        std::copy(seed->begin(), seed->end(), seed_bytes.begin());
    } else {
        randombytes_buf(seed_bytes.data(), seed_bytes.size());
    }

    KeyPair kp;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> expanded;
    crypto_sign_seed_keypair(kp.verification_key.data(), expanded.data(), seed_bytes.data());
    kp.signing_key = seed_bytes;
    kp.key_id = key_id_for(kp.verification_key);
    return kp;
}

Signature sign(std::span<const std::uint8_t> message, const SecretKey& signing_key) {
    ensure_sodium();
    counters().signatures_created.fetch_add(1, std::memory_order_relaxed);

    PublicKey pk;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> expanded;
    if (crypto_sign_seed_keypair(pk.data(), expanded.data(), signing_key.data()) != 0) {
        throw InvalidKey("signing key rejected");
    }

    Signature sig;
    crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                         expanded.data());
    return sig;
}

bool verify_signature(std::span<const std::uint8_t> message, const Signature& sig,
                      const PublicKey& verification_key) {
    ensure_sodium();
    counters().signature_verifications.fetch_add(1, std::memory_order_relaxed);
    return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                       verification_key.data()) == 0;
}

OpCounters& counters() {
    static OpCounters instance;
    return instance;
}

} // namespace ssivdr::crypto
