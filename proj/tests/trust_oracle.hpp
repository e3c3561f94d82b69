#pragma once

// Independent brute-force trust evaluator used as a test oracle. Same
// resolution rule as the engine, deliberately different structure: no
// memoization, no search pruning, exhaustive simple-path enumeration,
// exclusion sets passed by value.

#include "ssivdr/trust.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using ssivdr::trust::TrustGraph;

inline std::vector<std::pair<std::string, double>> out_edges(const TrustGraph& g,
                                                             const std::string& from) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [subject, edges] : g.incoming) {
        auto it = edges.find(from);
        if (it != edges.end()) out.emplace_back(subject, it->second.score);
    }
    return out;
}

// (node, exclusion set) -> score. The score is a pure function of that
// pair, so caching repeated subproblems changes nothing but the runtime.
using Memo = std::map<std::pair<std::string, std::set<std::string>>, double>;

inline double score(const TrustGraph& g, const std::string& n, std::set<std::string> excl,
                    Memo& memo) {
    if (g.roots.count(n)) return 1.0;
    auto memo_key = std::make_pair(n, excl);
    if (auto it = memo.find(memo_key); it != memo.end()) return it->second;

    std::vector<std::pair<std::string, double>> usable; // (endorser, endorsement score)
    if (auto it = g.incoming.find(n); it != g.incoming.end()) {
        for (const auto& [endorser, e] : it->second) {
            if (!excl.count(endorser)) usable.emplace_back(endorser, e.score);
        }
    }
    if (usable.empty()) {
        memo[memo_key] = 0.0;
        return 0.0;
    }

    std::set<std::string> inner = excl;
    inner.insert(n);

    bool direct_root = std::any_of(usable.begin(), usable.end(),
                                   [&](const auto& p) { return g.roots.count(p.first) != 0; });
    if (direct_root) {
        double sum = 0.0;
        for (const auto& [endorser, s] : usable) {
            sum += score(g, endorser, inner, memo) * s;
        }
        double result = sum / static_cast<double>(usable.size());
        memo[memo_key] = result;
        return result;
    }

    // Exhaustive simple-path enumeration from every eligible root.
    double best = -1.0;
    std::vector<std::string> path;
    std::function<void(const std::string&, double)> walk = [&](const std::string& cur,
                                                               double prod) {
        for (const auto& [to, edge_score] : out_edges(g, cur)) {
            if (to == n) {
                best = std::max(best, prod * edge_score);
                continue;
            }
            if (inner.count(to)) continue;
            if (std::find(path.begin(), path.end(), to) != path.end()) continue;
            double t = score(g, to, inner, memo);
            path.push_back(to);
            walk(to, prod * t);
            path.pop_back();
        }
    };
    for (const auto& r : g.roots) {
        if (excl.count(r)) continue;
        path.assign(1, r);
        walk(r, 1.0);
    }
    double result = best < 0.0 ? 0.0 : best;
    memo[memo_key] = result;
    return result;
}

inline double score(const TrustGraph& g, const std::string& n,
                    std::set<std::string> excl = {}) {
    Memo memo;
    return score(g, n, std::move(excl), memo);
}

} // namespace oracle
