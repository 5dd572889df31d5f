#include "vloc/cpg/graph.hpp"

#include <set>
#include <tuple>

#include "vloc/minic/ast.hpp"

namespace vloc::cpg {

namespace {
constexpr std::array<std::string_view, kNumEdgeTypes> kEdgeNames = {
    "AST_CHILD", "AST_PARENT", "CFG_NEXT", "DFG_REACH", "NEXT_TOKEN", "GRAPH_LINK",
};
} // namespace

std::string_view to_string(EdgeType t) { return kEdgeNames[static_cast<std::size_t>(t)]; }

std::optional<EdgeType> edge_type_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kEdgeNames.size(); ++i)
        if (kEdgeNames[i] == s) return static_cast<EdgeType>(i);
    return std::nullopt;
}

bool edge_less(const Edge& a, const Edge& b) {
    return std::make_tuple(to_string(a.type), a.src, a.dst) <
           std::make_tuple(to_string(b.type), b.src, b.dst);
}

bool is_statement_node(const GraphNode& n) {
    const auto kind = minic::ast_kind_from_string(n.kind);
    return kind && minic::is_statement_kind(*kind, n.tokens);
}

void validate(const CodeGraph& g) {
    if (g.nodes.empty()) throw MalformedRecord("graph has no nodes");
    const int n = static_cast<int>(g.nodes.size());
    for (int i = 0; i < n; ++i) {
        const auto& node = g.nodes[static_cast<std::size_t>(i)];
        if (node.id != i) throw MalformedRecord("node ids must be dense and ascending");
        if (i == 0) {
            if (node.kind != kDummyKind || node.tokens != std::vector<std::string>{std::string(kGraphToken)} ||
                node.line)
                throw MalformedRecord("node 0 must be the dummy node");
            continue;
        }
        if (!minic::ast_kind_from_string(node.kind))
            throw MalformedRecord("unknown node kind '" + node.kind + "'");
        if (!node.line || *node.line < 1) throw MalformedRecord("node " + std::to_string(i) + " has no line");
    }
    std::set<std::pair<int, int>> child, parent;
    for (const auto& e : g.edges) {
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
            throw MalformedRecord("edge endpoint out of range");
        if (e.type == EdgeType::GraphLink && e.src != 0 && e.dst != 0)
            throw MalformedRecord("GRAPH_LINK edge does not touch node 0");
        if (e.type != EdgeType::GraphLink && (e.src == 0 || e.dst == 0))
            throw MalformedRecord("only GRAPH_LINK edges may touch node 0");
        if (e.type == EdgeType::AstChild) child.insert({e.src, e.dst});
        if (e.type == EdgeType::AstParent) parent.insert({e.dst, e.src});
    }
    if (child != parent) throw MalformedRecord("AST_PARENT edges are not the reverse of AST_CHILD");
}

void validate(const Sample& s) {
    validate(s.graph);
    const int n = static_cast<int>(s.graph.nodes.size());
    if (s.label_node < 0 || s.label_node >= n) throw MalformedRecord("label_node out of range");
    if ((s.label_node == 0) != !s.vulnerable_line.has_value())
        throw MalformedRecord("label_node 0 must coincide with a null vulnerable_line");
    if (s.label_node > 0) {
        const auto& node = s.graph.nodes[static_cast<std::size_t>(s.label_node)];
        if (node.line != s.vulnerable_line) throw MalformedRecord("label node line differs from vulnerable_line");
        if (!is_statement_node(node)) throw MalformedRecord("label node is not statement-level");
    }
}

} // namespace vloc::cpg
