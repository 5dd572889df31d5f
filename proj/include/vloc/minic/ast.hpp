#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vloc/minic/lexer.hpp"

namespace vloc::minic {

enum class AstKind {
    Function,
    ParamList,
    Block,
    Decl,
    Assign,
    If,
    While,
    For,
    Return,
    Call,
    BinaryOp,
    UnaryOp,
    Index,
    Identifier,
    Literal,
};

std::string_view to_string(AstKind k);
std::optional<AstKind> ast_kind_from_string(std::string_view s);

struct AstNode {
    int id = 0;
    AstKind kind = AstKind::Function;
    int parent = -1;
    std::vector<int> children;
    int line = 1;
    /// Token texts owned by this node, in source order.
    std::vector<std::string> tokens;
    /// Positions of the owned tokens in the token stream (parallel to tokens).
    std::vector<int> token_pos;
};

/// Pre-order numbered tree; nodes[0] is the Function.
struct Ast {
    std::vector<AstNode> nodes;

    const AstNode& root() const { return nodes.front(); }
    const AstNode& operator[](int id) const { return nodes[static_cast<std::size_t>(id)]; }
    std::size_t size() const { return nodes.size(); }
    std::string function_name() const;
};

/// Statement-level nodes are the units of control flow and the only valid
/// ground-truth locations. Decl and Call qualify only when they terminate a
/// statement, i.e. own a ";" token (parameters and nested calls do not).
bool is_statement_kind(AstKind kind, const std::vector<std::string>& tokens);
inline bool is_statement(const AstNode& n) { return is_statement_kind(n.kind, n.tokens); }

/// Variable named by a Decl node (parameter or local).
std::string decl_name(const AstNode& decl);

/// Renders the tree back to MiniC, one statement per line.
std::string pretty_print(const Ast& ast);

/// Indented kind/tokens/line dump for debugging.
std::string dump(const Ast& ast);

} // namespace vloc::minic
