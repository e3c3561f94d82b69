#pragma once

#include "ssivdr/identity.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace ssivdr::trust {

struct Threshold {
    double tau = 0.5; // in (0,1]

    explicit Threshold(double t);
    Threshold() = default;
};

/// Endorsement path from a root manufacturer to a subject, with the
/// propagated score it witnesses.
struct TrustPath {
    std::vector<Did> chain;
    double score = 0.0;

    Json to_json() const;
    static TrustPath from_json(const Json& j);
};

/// The web of trust: registered principals, manufacturer roots, proxy
/// issuers and at most one endorsement per ordered (endorser, subject) pair.
struct TrustGraph {
    std::map<std::string, Role> nodes;  // DID text -> role
    std::set<std::string> roots;        // manufacturers
    std::set<std::string> proxies;      // procedurally empowered anchors
    // subject -> endorser -> endorsement (latest timestamp wins)
    std::map<std::string, std::map<std::string, Endorsement>> incoming;

    void add_node(const Did& did, Role role);
    bool has_node(const std::string& did_text) const {
        return nodes.count(did_text) != 0;
    }
    bool is_root(const std::string& did_text) const { return roots.count(did_text) != 0; }
    const Endorsement* edge(const std::string& endorser, const std::string& subject) const;
    std::size_t edge_count() const;
};

/// Inserts or replaces (newer endorsed_at wins) after verifying the
/// endorsement signature. Throws InvalidEndorsement, SelfEndorsement,
/// UnknownPrincipal.
void add_endorsement(TrustGraph& graph, const Endorsement& e,
                     const crypto::PublicKey& endorser_key);

/// Weighted mean of incoming endorsements, weights being the endorsers'
/// own trust scores. Manufacturers short-circuit to 1.0.
/// Throws NoEndorsements.
double direct_trust(const TrustGraph& graph, const Did& subject);

/// Best (maximum-product) simple path from any root to the subject:
/// product of the intermediate issuers' trust scores times the final
/// edge's endorsement score. Throws NoTrustLinkage when unreachable.
std::pair<double, TrustPath> propagated_trust(const TrustGraph& graph, const Did& subject);

/// Total resolution rule: manufacturers 1.0; direct manufacturer
/// endorsement -> direct_trust; else best-path propagation; isolated 0.0.
double trust_score(const TrustGraph& graph, const Did& subject);

struct OnboardDecision {
    bool admit = false;
    double score = 0.0;
};

OnboardDecision is_onboardable(const TrustGraph& graph, const Did& subject, Threshold t);

/// Witnessing path for onboarding evidence. Single-hop [m, subject] for a
/// direct manufacturer endorsement, otherwise the propagated witness.
TrustPath find_trust_linkage(const TrustGraph& graph, const Did& subject);

/// Flags a proxy issuer. Proxies gain no score bonus, only the right to
/// anchor onboarding linkages. Throws NotAManufacturer, ProxyTrustTooLow.
void designate_proxy(TrustGraph& graph, const Did& manufacturer, const Did& proxy,
                     Threshold min_trust);

} // namespace ssivdr::trust
