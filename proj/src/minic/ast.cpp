#include "vloc/minic/ast.hpp"

#include <array>
#include <sstream>

namespace vloc::minic {

namespace {

constexpr std::array<std::string_view, 15> kKindNames = {
    "Function", "ParamList", "Block", "Decl",       "Assign",     "If",       "While",  "For",
    "Return",   "Call",      "BinaryOp", "UnaryOp", "Index", "Identifier", "Literal",
};

bool is_type_token(std::string_view t) { return t == "int" || t == "char" || t == "void" || t == "*"; }

class Printer {
  public:
    explicit Printer(const Ast& ast) : ast_(ast) {}

    std::string function() {
        const AstNode& fn = ast_.root();
        std::string head = join_decl_tokens(fn.tokens);
        const AstNode& params = ast_[fn.children[0]];
        head += "(";
        if (params.children.empty()) {
            for (const auto& t : params.tokens)
                if (t == "void") head += "void";
        }
        for (std::size_t i = 0; i < params.children.size(); ++i) {
            if (i) head += ", ";
            head += join_decl_tokens(ast_[params.children[i]].tokens);
        }
        head += ")";
        out_ << head << " ";
        block(ast_[fn.children[1]], 0);
        out_ << "\n";
        return out_.str();
    }

  private:
    const Ast& ast_;
    std::ostringstream out_;

    static std::string join_decl_tokens(const std::vector<std::string>& toks) {
        std::string s;
        for (const auto& t : toks) {
            if (t == "[" || t == "]" || t == ";") {
                s += t;
                continue;
            }
            if (!s.empty() && s.back() != '*' && s.back() != '[') s += " ";
            s += t;
        }
        return s;
    }

    static void indent(std::ostream& os, int depth) {
        for (int i = 0; i < depth; ++i) os << "    ";
    }

    // Prints "{ ... }" assuming the cursor sits where "{" goes; no trailing newline.
    void block(const AstNode& b, int depth) {
        out_ << "{\n";
        for (int c : b.children) statement(ast_[c], depth + 1);
        indent(out_, depth);
        out_ << "}";
    }

    // Body of if/while/for: a block stays on the header line.
    void body(const AstNode& s, int depth) {
        if (s.kind == AstKind::Block) {
            out_ << " ";
            block(s, depth);
            out_ << "\n";
        } else {
            out_ << "\n";
            statement(s, depth + 1);
        }
    }

    void statement(const AstNode& s, int depth) {
        if (s.kind == AstKind::Block) {
            indent(out_, depth);
            block(s, depth);
            out_ << "\n";
            return;
        }
        indent(out_, depth);
        if (s.kind == AstKind::If) {
            if_chain(s, depth);
            return;
        }
        if (s.kind == AstKind::While) {
            out_ << "while (" << expr(ast_[s.children[0]]) << ")";
            body(ast_[s.children[1]], depth);
            return;
        }
        if (s.kind == AstKind::For) {
            out_ << "for (" << simple(ast_[s.children[0]]) << " " << expr(ast_[s.children[1]]) << "; "
                 << simple(ast_[s.children[2]]) << ")";
            body(ast_[s.children[3]], depth);
            return;
        }
        out_ << simple(s) << "\n";
    }

    void if_chain(const AstNode& s, int depth) {
        out_ << "if (" << expr(ast_[s.children[0]]) << ")";
        const AstNode& then_s = ast_[s.children[1]];
        const bool has_else = s.children.size() > 2;
        if (then_s.kind == AstKind::Block) {
            out_ << " ";
            block(then_s, depth);
            if (!has_else) out_ << "\n";
        } else {
            out_ << "\n";
            statement(then_s, depth + 1);
            if (has_else) indent(out_, depth);
        }
        if (!has_else) return;
        if (then_s.kind == AstKind::Block) out_ << " ";
        out_ << "else";
        const AstNode& else_s = ast_[s.children[2]];
        if (else_s.kind == AstKind::If) {
            out_ << " ";
            if_chain(else_s, depth);
        } else {
            body(else_s, depth);
        }
    }

    // Decl / Assign / Call / Return including the terminating ";" when owned.
    std::string simple(const AstNode& s) {
        const bool semi = !s.tokens.empty() && s.tokens.back() == ";";
        std::string r;
        switch (s.kind) {
        case AstKind::Decl: {
            std::size_t child = 0;
            for (const auto& t : s.tokens) {
                if (t == ";") continue;
                if (t == "[") {
                    r += "[" + expr(ast_[s.children[child++]]);
                    continue;
                }
                if (t == "]") {
                    r += "]";
                    continue;
                }
                if (t == "=") {
                    r += " = " + expr(ast_[s.children[child++]]);
                    continue;
                }
                if (!r.empty() && r.back() != '*') r += " ";
                r += t;
            }
            break;
        }
        case AstKind::Assign:
            r = expr(ast_[s.children[0]]) + " = " + expr(ast_[s.children[1]]);
            break;
        case AstKind::Return:
            r = "return";
            if (!s.children.empty()) r += " " + expr(ast_[s.children[0]]);
            break;
        default:
            r = expr(s);
            break;
        }
        return semi ? r + ";" : r;
    }

    std::string expr(const AstNode& n) {
        std::size_t wraps = 0;
        while (wraps < n.tokens.size() && n.tokens[wraps] == "(") ++wraps;
        std::string core;
        switch (n.kind) {
        case AstKind::Identifier:
        case AstKind::Literal:
            core = n.tokens[wraps];
            break;
        case AstKind::BinaryOp:
            core = expr(ast_[n.children[0]]) + " " + n.tokens[wraps] + " " + expr(ast_[n.children[1]]);
            break;
        case AstKind::UnaryOp: {
            const std::string operand = expr(ast_[n.children[0]]);
            core = n.tokens[wraps];
            if (!operand.empty() && std::string_view("-&*!=+").find(operand.front()) != std::string_view::npos)
                core += " ";
            core += operand;
            break;
        }
        case AstKind::Index:
            core = expr(ast_[n.children[0]]) + "[" + expr(ast_[n.children[1]]) + "]";
            break;
        case AstKind::Call: {
            core = n.tokens[wraps] + "(";
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i) core += ", ";
                core += expr(ast_[n.children[i]]);
            }
            core += ")";
            break;
        }
        default:
            core = "/*?*/";
        }
        return std::string(wraps, '(') + core + std::string(wraps, ')');
    }
};

void dump_node(const Ast& ast, int id, int depth, std::ostream& os) {
    const AstNode& n = ast[id];
    for (int i = 0; i < depth; ++i) os << "  ";
    os << to_string(n.kind) << " #" << n.id << " @" << n.line << " [";
    for (std::size_t i = 0; i < n.tokens.size(); ++i) os << (i ? " " : "") << n.tokens[i];
    os << "]\n";
    for (int c : n.children) dump_node(ast, c, depth + 1, os);
}

} // namespace

std::string_view to_string(AstKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<AstKind> ast_kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == s) return static_cast<AstKind>(i);
    return std::nullopt;
}

std::string Ast::function_name() const {
    for (const auto& t : root().tokens)
        if (!is_type_token(t)) return t;
    return {};
}

bool is_statement_kind(AstKind kind, const std::vector<std::string>& tokens) {
    switch (kind) {
    case AstKind::Assign:
    case AstKind::If:
    case AstKind::While:
    case AstKind::For:
    case AstKind::Return:
        return true;
    case AstKind::Decl:
    case AstKind::Call:
        return !tokens.empty() && tokens.back() == ";";
    default:
        return false;
    }
}

std::string decl_name(const AstNode& decl) {
    for (const auto& t : decl.tokens)
        if (!is_type_token(t)) return t;
    return {};
}

std::string pretty_print(const Ast& ast) { return Printer(ast).function(); }

std::string dump(const Ast& ast) {
    std::ostringstream os;
    if (!ast.nodes.empty()) dump_node(ast, 0, 0, os);
    return os.str();
}

} // namespace vloc::minic
