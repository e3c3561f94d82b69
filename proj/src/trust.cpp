#include "ssivdr/trust.hpp"

#include "ssivdr/errors.hpp"

#include <algorithm>

namespace ssivdr::trust {

Threshold::Threshold(double t) : tau(t) {
    if (!(t > 0.0 && t <= 1.0)) {
        throw InvalidValue("threshold must be in (0,1]");
    }
}

Json TrustPath::to_json() const {
    Json chain_json = Json::array();
    for (const auto& d : chain) {
        chain_json.push_back(d.text());
    }
    return Json{{"chain", chain_json}, {"score", score}};
}

TrustPath TrustPath::from_json(const Json& j) {
    TrustPath p;
    for (const auto& d : j.at("chain")) {
        p.chain.push_back(Did::parse(d.get<std::string>()));
    }
    p.score = j.at("score").get<double>();
    return p;
}

void TrustGraph::add_node(const Did& did, Role role) {
    nodes[did.text()] = role;
    if (role == Role::Manufacturer) {
        roots.insert(did.text());
    }
}

const Endorsement* TrustGraph::edge(const std::string& endorser,
                                    const std::string& subject) const {
    auto it = incoming.find(subject);
    if (it == incoming.end()) return nullptr;
    auto jt = it->second.find(endorser);
    return jt == it->second.end() ? nullptr : &jt->second;
}

std::size_t TrustGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& [subject, edges] : incoming) {
        n += edges.size();
    }
    return n;
}

void add_endorsement(TrustGraph& graph, const Endorsement& e,
                     const crypto::PublicKey& endorser_key) {
    if (e.endorser == e.subject) {
        throw SelfEndorsement();
    }
    if (!graph.has_node(e.endorser.text())) {
        throw UnknownPrincipal(e.endorser.text());
    }
    if (!graph.has_node(e.subject.text())) {
        throw UnknownPrincipal(e.subject.text());
    }
    if (e.score < 0.0 || e.score > 1.0) {
        throw InvalidEndorsement("endorsement score outside [0,1]");
    }
    if (!verify_endorsement_signature(e, endorser_key)) {
        throw InvalidEndorsement("endorsement signature does not verify");
    }
    auto& slot = graph.incoming[e.subject.text()];
    auto it = slot.find(e.endorser.text());
    if (it != slot.end() && it->second.endorsed_at > e.endorsed_at) {
        return; // stale: latest timestamp wins
    }
    slot[e.endorser.text()] = e;
}

namespace {

// Recursive trust evaluation with an exclusion context. A node's score
// never depends on evidence contributed by nodes currently under
// evaluation above it, which cuts cycles and guarantees termination.
class Evaluator {
public:
    explicit Evaluator(const TrustGraph& g) : graph_(g) {}

    double score(const std::string& n, std::set<std::string>& excl) {
        if (graph_.is_root(n)) return 1.0;
        std::string key = memo_key(n, excl);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;

        double result = 0.0;
        auto edges = usable_edges(n, excl);
        if (!edges.empty()) {
            bool direct_root = std::any_of(edges.begin(), edges.end(), [&](const auto* e) {
                return graph_.is_root(e->endorser.text());
            });
            if (direct_root) {
                result = direct(n, edges, excl);
            } else {
                TrustPath unused;
                result = best_path(n, excl, unused);
            }
        }
        memo_[key] = result;
        return result;
    }

    // Weighted mean over usable incoming edges.
    double direct(const std::string& n, const std::vector<const Endorsement*>& edges,
                  std::set<std::string>& excl) {
        excl.insert(n);
        double sum = 0.0;
        for (const auto* e : edges) {
            sum += score(e->endorser.text(), excl) * e->score;
        }
        excl.erase(n);
        return sum / static_cast<double>(edges.size());
    }

    // Maximum-product simple root->n path; factors are the intermediates'
    // trust scores and the last edge's endorsement score. Returns 0 and an
    // empty witness when unreachable.
    double best_path(const std::string& n, std::set<std::string>& excl, TrustPath& witness) {
        excl.insert(n);
        double best = -1.0;
        std::vector<std::string> path;
        std::set<std::string> on_path;
        for (const auto& root : graph_.roots) {
            if (excl.count(root)) continue;
            path.assign(1, root);
            on_path = {root};
            dfs(root, n, 1.0, excl, path, on_path, best, witness);
        }
        excl.erase(n);
        return best < 0.0 ? 0.0 : best;
    }

    std::vector<const Endorsement*> usable_edges(const std::string& n,
                                                 const std::set<std::string>& excl) const {
        std::vector<const Endorsement*> out;
        auto it = graph_.incoming.find(n);
        if (it == graph_.incoming.end()) return out;
        for (const auto& [endorser, e] : it->second) {
            if (!excl.count(endorser)) {
                out.push_back(&e);
            }
        }
        return out;
    }

private:
    void dfs(const std::string& cur, const std::string& target, double prod,
             std::set<std::string>& excl, std::vector<std::string>& path,
             std::set<std::string>& on_path, double& best, TrustPath& witness) {
        if (prod <= best) return; // future factors are <= 1
        for (const auto& [subject, edges] : graph_.incoming) {
            auto it = edges.find(cur);
            if (it == edges.end()) continue;
            const Endorsement& e = it->second;
            if (subject == target) {
                double candidate = prod * e.score;
                if (candidate > best) {
                    best = candidate;
                    witness.chain.clear();
                    for (const auto& p : path) witness.chain.push_back(Did::parse(p));
                    witness.chain.push_back(Did::parse(target));
                    witness.score = candidate;
                }
                continue;
            }
            if (on_path.count(subject) || excl.count(subject)) continue;
            double t = score(subject, excl);
            path.push_back(subject);
            on_path.insert(subject);
            dfs(subject, target, prod * t, excl, path, on_path, best, witness);
            on_path.erase(subject);
            path.pop_back();
        }
    }

    static std::string memo_key(const std::string& n, const std::set<std::string>& excl) {
        std::string key = n;
        for (const auto& x : excl) {
            key += '|';
            key += x;
        }
        return key;
    }

    const TrustGraph& graph_;
    std::map<std::string, double> memo_;
};

} // namespace

double direct_trust(const TrustGraph& graph, const Did& subject) {
    if (graph.is_root(subject.text())) return 1.0;
    Evaluator eval(graph);
    std::set<std::string> excl;
    auto edges = eval.usable_edges(subject.text(), excl);
    if (edges.empty()) {
        throw NoEndorsements(subject.text());
    }
    return eval.direct(subject.text(), edges, excl);
}

std::pair<double, TrustPath> propagated_trust(const TrustGraph& graph, const Did& subject) {
    Evaluator eval(graph);
    std::set<std::string> excl;
    TrustPath witness;
    double best = eval.best_path(subject.text(), excl, witness);
    if (witness.chain.empty()) {
        throw NoTrustLinkage(subject.text());
    }
    witness.score = best;
    return {best, witness};
}

double trust_score(const TrustGraph& graph, const Did& subject) {
    Evaluator eval(graph);
    std::set<std::string> excl;
    return eval.score(subject.text(), excl);
}

OnboardDecision is_onboardable(const TrustGraph& graph, const Did& subject, Threshold t) {
    double s = trust_score(graph, subject);
    return {s >= t.tau, s};
}

TrustPath find_trust_linkage(const TrustGraph& graph, const Did& subject) {
    if (graph.is_root(subject.text())) {
        return {{subject}, 1.0};
    }
    // Direct manufacturer endorsement: the single-hop witness, scored by
    // the full resolution rule.
    auto it = graph.incoming.find(subject.text());
    if (it != graph.incoming.end()) {
        const Endorsement* best = nullptr;
        for (const auto& [endorser, e] : it->second) {
            if (graph.is_root(endorser) && (!best || e.score > best->score)) {
                best = &e;
            }
        }
        if (best) {
            return {{best->endorser, subject}, trust_score(graph, subject)};
        }
    }
    return propagated_trust(graph, subject).second;
}

void designate_proxy(TrustGraph& graph, const Did& manufacturer, const Did& proxy,
                     Threshold min_trust) {
    if (!graph.is_root(manufacturer.text())) {
        throw NotAManufacturer(manufacturer.text());
    }
    if (!graph.has_node(proxy.text())) {
        throw UnknownPrincipal(proxy.text());
    }
    double s = trust_score(graph, proxy);
    if (s < min_trust.tau) {
        throw ProxyTrustTooLow("proxy trust " + std::to_string(s) + " below " +
                               std::to_string(min_trust.tau));
    }
    graph.proxies.insert(proxy.text());
}

} // namespace ssivdr::trust
