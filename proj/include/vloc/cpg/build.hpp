#pragma once

#include <optional>

#include "vloc/cpg/graph.hpp"
#include "vloc/minic/ast.hpp"

namespace vloc::cpg {

inline constexpr int kDefaultMaxNodes = 512;

/// Dummy node 0 followed by AST nodes (AST id + 1), with all six edge layers.
CodeGraph build_cpg(const minic::Ast& ast, int max_nodes = kDefaultMaxNodes);

/// Labels the lowest-id statement node on `vulnerable_line`, or the dummy.
Sample annotate(CodeGraph graph, std::optional<int> vulnerable_line);

} // namespace vloc::cpg
