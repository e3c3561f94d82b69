#pragma once

#include <stdexcept>
#include <string>

namespace ssivdr {

// Domain precondition violations. Ledger-level validation failures are
// reported as receipt values, not exceptions (see ledger.hpp).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidSeed : DomainError {
    InvalidSeed() : DomainError("seed must be exactly 32 bytes") {}
};

struct InvalidKey : DomainError {
    using DomainError::DomainError;
};

struct InvalidValue : DomainError {
    using DomainError::DomainError;
};

struct DuplicateClaim : DomainError {
    explicit DuplicateClaim(const std::string& key)
        : DomainError("duplicate claim key: " + key) {}
};

struct InvalidEndorsement : DomainError {
    using DomainError::DomainError;
};

struct SelfEndorsement : DomainError {
    SelfEndorsement() : DomainError("an issuer cannot endorse itself") {}
};

struct UnknownPrincipal : DomainError {
    explicit UnknownPrincipal(const std::string& did)
        : DomainError("unknown principal: " + did) {}
};

struct NoEndorsements : DomainError {
    explicit NoEndorsements(const std::string& did)
        : DomainError("no incoming endorsements for " + did) {}
};

struct NoTrustLinkage : DomainError {
    explicit NoTrustLinkage(const std::string& did)
        : DomainError("no trust linkage from any root to " + did) {}
};

struct ProxyTrustTooLow : DomainError {
    using DomainError::DomainError;
};

struct NotAManufacturer : DomainError {
    explicit NotAManufacturer(const std::string& did)
        : DomainError("not a manufacturer: " + did) {}
};

struct NotOwner : DomainError {
    explicit NotOwner(const std::string& did)
        : DomainError("caller does not own device " + did) {}
};

struct TypeMismatch : DomainError {
    using DomainError::DomainError;
};

struct NewOwnerNotOnboarded : DomainError {
    explicit NewOwnerNotOnboarded(const std::string& did)
        : DomainError("new owner is not an onboarded issuer: " + did) {}
};

struct IntegrityViolation : DomainError {
    using DomainError::DomainError;
};

struct InvalidConfig : DomainError {
    using DomainError::DomainError;
};

struct InsufficientFixture : DomainError {
    using DomainError::DomainError;
};

} // namespace ssivdr
