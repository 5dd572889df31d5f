#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vloc/common/error.hpp"

namespace vloc::cpg {

VLOC_DEFINE_ERROR(GraphTooLarge);
VLOC_DEFINE_ERROR(LineNotFound);
VLOC_DEFINE_ERROR(SchemaVersionMismatch);
VLOC_DEFINE_ERROR(MalformedRecord);

enum class EdgeType : std::uint8_t { AstChild, AstParent, CfgNext, DfgReach, NextToken, GraphLink };

inline constexpr int kNumEdgeTypes = 6;
inline constexpr std::array<EdgeType, kNumEdgeTypes> kAllEdgeTypes = {
    EdgeType::AstChild, EdgeType::AstParent, EdgeType::CfgNext,
    EdgeType::DfgReach, EdgeType::NextToken, EdgeType::GraphLink,
};

std::string_view to_string(EdgeType t);
std::optional<EdgeType> edge_type_from_string(std::string_view s);

inline constexpr std::string_view kDummyKind = "Dummy";
inline constexpr std::string_view kGraphToken = "<GRAPH>";

struct GraphNode {
    int id = 0;
    std::string kind;
    std::vector<std::string> tokens;
    std::optional<int> line; // none only for the dummy node

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct Edge {
    int src = 0;
    int dst = 0;
    EdgeType type = EdgeType::AstChild;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Canonical edge order: (type name, src, dst).
bool edge_less(const Edge& a, const Edge& b);

struct CodeGraph {
    std::vector<GraphNode> nodes; // nodes[0] is the dummy
    std::vector<Edge> edges;      // canonical order, no duplicates
    std::string function_name;

    std::size_t size() const { return nodes.size(); }
    friend bool operator==(const CodeGraph&, const CodeGraph&) = default;
};

/// Statement-level nodes (Decl/Assign/If/While/For/Return/Call-as-statement).
bool is_statement_node(const GraphNode& n);

struct Sample {
    CodeGraph graph;
    int label_node = 0; // 0 = non-vulnerable
    std::optional<int> vulnerable_line;
    std::int64_t commit_ts = 0;
    std::string source_path;

    bool vulnerable() const { return label_node > 0; }
    friend bool operator==(const Sample&, const Sample&) = default;
};

/// Checks every structural invariant of a graph/sample; throws MalformedRecord.
void validate(const CodeGraph& g);
void validate(const Sample& s);

} // namespace vloc::cpg
