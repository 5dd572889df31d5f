#pragma once
// Brute-force reaching definitions on loop-free CFGs: enumerate every path
// into each use and take the last definition(s) before it.

#include <algorithm>
#include <functional>
#include <map>

#include "vloc/cpg/flow.hpp"

namespace oracle {

inline std::set<vloc::cpg::NodePair> reaching_by_paths(const vloc::minic::Ast& ast, const vloc::cpg::Cfg& cfg) {
    using vloc::cpg::DefUse;
    std::map<int, std::vector<int>> preds;
    std::map<int, DefUse> du;
    for (int s : cfg.statements) {
        preds[s];
        du[s] = vloc::cpg::def_use(ast, s);
    }
    for (const auto& [a, b] : cfg.edges) preds[b].push_back(a);

    std::map<std::string, int> params;
    for (int p : vloc::cpg::parameter_decls(ast)) params[vloc::minic::decl_name(ast[p])] = p;

    std::set<vloc::cpg::NodePair> out;
    for (int u : cfg.statements) {
        for (const auto& v : du[u].uses) {
            // walk backwards over every path; `path` holds nodes before u
            std::vector<int> path;
            std::function<void(int)> back = [&](int node) {
                const auto& ps = preds[node];
                if (ps.empty()) {
                    // path = [source ... pred(u)] reversed order in `path`
                    bool killed = false;
                    for (int d : path) { // nearest first
                        const auto& x = du[d];
                        if (std::find(x.weak_defs.begin(), x.weak_defs.end(), v) != x.weak_defs.end())
                            out.insert({d, u});
                        if (x.strong_def == v) {
                            out.insert({d, u});
                            killed = true;
                            break;
                        }
                    }
                    const int source = path.empty() ? u : path.back();
                    if (!killed && source == cfg.entry && params.count(v)) out.insert({params[v], u});
                    return;
                }
                for (int p : ps) {
                    path.push_back(p);
                    back(p);
                    path.pop_back();
                }
            };
            back(u);
        }
    }
    return out;
}

} // namespace oracle
