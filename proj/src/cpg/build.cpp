#include "vloc/cpg/build.hpp"

#include <algorithm>

#include "vloc/cpg/flow.hpp"

namespace vloc::cpg {

CodeGraph build_cpg(const minic::Ast& ast, int max_nodes) {
    const int n = static_cast<int>(ast.size()) + 1;
    if (n > max_nodes)
        throw GraphTooLarge(std::to_string(n) + " nodes exceeds the cap of " + std::to_string(max_nodes));

    CodeGraph g;
    g.function_name = ast.function_name();
    g.nodes.reserve(static_cast<std::size_t>(n));
    g.nodes.push_back({0, std::string(kDummyKind), {std::string(kGraphToken)}, std::nullopt});
    for (const auto& a : ast.nodes)
        g.nodes.push_back({a.id + 1, std::string(minic::to_string(a.kind)), a.tokens, a.line});

    auto& edges = g.edges;
    std::vector<std::pair<int, int>> leaves; // (first token position, graph id)
    for (const auto& a : ast.nodes) {
        for (int c : a.children) {
            edges.push_back({a.id + 1, c + 1, EdgeType::AstChild});
            edges.push_back({c + 1, a.id + 1, EdgeType::AstParent});
        }
        if (a.children.empty() && !a.token_pos.empty()) leaves.emplace_back(a.token_pos.front(), a.id + 1);
    }
    std::sort(leaves.begin(), leaves.end());
    for (std::size_t i = 1; i < leaves.size(); ++i)
        edges.push_back({leaves[i - 1].second, leaves[i].second, EdgeType::NextToken});

    const Cfg cfg = cfg_successors(ast);
    for (const auto& [a, b] : cfg.edges) edges.push_back({a + 1, b + 1, EdgeType::CfgNext});
    for (const auto& [d, u] : dfg_edges(ast, cfg)) edges.push_back({d + 1, u + 1, EdgeType::DfgReach});

    // The dummy both broadcasts to and gathers from every statement.
    for (int s : cfg.statements) {
        edges.push_back({0, s + 1, EdgeType::GraphLink});
        edges.push_back({s + 1, 0, EdgeType::GraphLink});
    }

    std::sort(edges.begin(), edges.end(), edge_less);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return g;
}

Sample annotate(CodeGraph graph, std::optional<int> vulnerable_line) {
    Sample s;
    if (vulnerable_line) {
        const auto it = std::find_if(graph.nodes.begin() + 1, graph.nodes.end(), [&](const GraphNode& n) {
            return n.line == vulnerable_line && is_statement_node(n);
        });
        if (it == graph.nodes.end())
            throw LineNotFound("no statement on line " + std::to_string(*vulnerable_line) + " in " +
                               graph.function_name);
        s.label_node = it->id;
        s.vulnerable_line = vulnerable_line;
    }
    s.graph = std::move(graph);
    return s;
}

} // namespace vloc::cpg
