#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vloc/minic/ast.hpp"

namespace vloc::cpg {

using NodePair = std::pair<int, int>;

/// Statement-level control flow over AST ids.
struct Cfg {
    std::set<NodePair> edges;
    int entry = -1; // first executed statement, -1 for an empty body
    std::vector<int> statements; // statement-level ids in pre-order
};

Cfg cfg_successors(const minic::Ast& ast);

/// Variables a statement defines and reads. Indexed stores are weak
/// (they do not kill earlier definitions); `*p = v` only reads p and v.
struct DefUse {
    std::string strong_def;           // empty if none
    std::vector<std::string> weak_defs;
    std::vector<std::string> uses;
};

DefUse def_use(const minic::Ast& ast, int stmt);

/// Parameter declarations, defined on function entry.
std::vector<int> parameter_decls(const minic::Ast& ast);

/// Reaching-definitions def→use pairs between statements (parameters act as
/// definitions at entry), via an iterative union-merge fixpoint.
std::set<NodePair> dfg_edges(const minic::Ast& ast, const Cfg& cfg);

} // namespace vloc::cpg
