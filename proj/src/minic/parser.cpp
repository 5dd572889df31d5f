#include "vloc/minic/parser.hpp"

#include <algorithm>
#include <memory>
#include <set>

namespace vloc::minic {

namespace {

std::string join_expected(const std::vector<std::string>& e) {
    std::string s;
    for (const auto& x : e) {
        if (!s.empty()) s += ", ";
        s += "'" + x + "'";
    }
    return s;
}

} // namespace

SyntaxError::SyntaxError(int line, int col, std::vector<std::string> expected,
                         const std::string& found)
    : Error("SyntaxError", "line " + std::to_string(line) + ", col " + std::to_string(col) +
                               ": expected one of {" + join_expected(expected) + "}, found " +
                               found),
      line_(line), col_(col), expected_(std::move(expected)) {}

namespace {

// Parse tree before pre-order numbering. Expressions are built bottom-up, so
// ids are assigned in a second pass.
struct PNode {
    AstKind kind;
    std::vector<int> toks;
    std::vector<std::unique_ptr<PNode>> kids;
};
using PPtr = std::unique_ptr<PNode>;

PPtr make(AstKind k) {
    auto p = std::make_unique<PNode>();
    p->kind = k;
    return p;
}

const std::set<std::string, std::less<>> kUnsupportedKeywords = {
    "break",  "case",    "const",  "continue", "default", "do",     "double", "enum",
    "float",  "goto",    "long",   "short",    "signed",  "sizeof", "static", "struct",
    "switch", "typedef", "union",  "unsigned",
};

const std::set<std::string, std::less<>> kUnsupportedOperators = {
    "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=",
    "<<", ">>", "->", ".",  "?",  ":",  "~",  "|",  "^",
};

class Parser {
  public:
    explicit Parser(std::span<const Token> toks) : toks_(toks) {}

    PPtr function() {
        auto fn = make(AstKind::Function);
        type_spec(*fn, /*allow_void=*/true);
        fn->toks.push_back(expect_ident());
        fn->kids.push_back(params());
        fn->kids.push_back(block());
        if (!at_end()) {
            if (is_type_keyword(peek().text))
                throw UnsupportedConstruct("multiple top-level definitions (line " +
                                           std::to_string(peek().line) + ")");
            fail({"end of input"});
        }
        return fn;
    }

  private:
    std::span<const Token> toks_;
    std::size_t pos_ = 0;

    bool at_end() const { return pos_ >= toks_.size(); }

    const Token& peek(std::size_t ahead = 0) const {
        static const Token eof{TokenKind::Punctuation, "<eof>", 0, 0};
        return pos_ + ahead < toks_.size() ? toks_[pos_ + ahead] : eof;
    }

    bool check(std::string_view text) const {
        if (at_end()) return false;
        const auto& t = peek();
        return t.text == text && t.kind != TokenKind::StringLiteral;
    }

    int take() {
        screen(peek());
        return static_cast<int>(pos_++);
    }

    [[noreturn]] void fail(std::vector<std::string> expected) const {
        if (at_end()) {
            const int line = toks_.empty() ? 1 : toks_.back().line;
            const int col = toks_.empty() ? 1 : toks_.back().col + static_cast<int>(toks_.back().text.size());
            throw SyntaxError(line, col, std::move(expected), "end of input");
        }
        screen(peek());
        throw SyntaxError(peek().line, peek().col, std::move(expected), "'" + peek().text + "'");
    }

    // Reject constructs outside the subset before reporting a plain syntax error.
    void screen(const Token& t) const {
        if (t.kind == TokenKind::Keyword && kUnsupportedKeywords.contains(t.text))
            throw UnsupportedConstruct("'" + t.text + "' at line " + std::to_string(t.line));
        if (t.kind == TokenKind::Operator && kUnsupportedOperators.contains(t.text))
            throw UnsupportedConstruct("operator '" + t.text + "' at line " +
                                       std::to_string(t.line));
    }

    int expect(std::string_view text) {
        if (!check(text)) fail({std::string(text)});
        return take();
    }

    int expect_ident() {
        if (at_end() || peek().kind != TokenKind::Identifier) fail({"identifier"});
        return take();
    }

    static bool is_type_keyword(std::string_view s) { return s == "int" || s == "char" || s == "void"; }

    void type_spec(PNode& owner, bool allow_void) {
        if (at_end() || peek().kind != TokenKind::Keyword) fail({"int", "char"});
        const auto& t = peek().text;
        if (!(t == "int" || t == "char" || (allow_void && t == "void"))) {
            screen(peek());
            fail(allow_void ? std::vector<std::string>{"int", "char", "void"}
                            : std::vector<std::string>{"int", "char"});
        }
        owner.toks.push_back(take());
        while (check("*")) owner.toks.push_back(take());
    }

    PPtr params() {
        auto pl = make(AstKind::ParamList);
        pl->toks.push_back(expect("("));
        if (check(")")) {
            pl->toks.push_back(take());
            return pl;
        }
        if (check("void") && peek(1).text == ")") {
            pl->toks.push_back(take());
            pl->toks.push_back(take());
            return pl;
        }
        for (;;) {
            auto d = make(AstKind::Decl);
            type_spec(*d, false);
            d->toks.push_back(expect_ident());
            if (check("[")) {
                d->toks.push_back(take());
                d->toks.push_back(expect("]"));
            }
            pl->kids.push_back(std::move(d));
            if (check(",")) {
                pl->toks.push_back(take());
                continue;
            }
            pl->toks.push_back(expect(")"));
            return pl;
        }
    }

    PPtr block() {
        auto b = make(AstKind::Block);
        b->toks.push_back(expect("{"));
        while (!check("}")) {
            if (at_end()) fail({"}"});
            b->kids.push_back(statement());
        }
        b->toks.push_back(take());
        return b;
    }

    PPtr statement() {
        const auto& t = peek();
        screen(t);
        if (check("{")) return block();
        if (t.kind == TokenKind::Keyword) {
            if (t.text == "int" || t.text == "char") return declaration();
            if (t.text == "if") return if_stmt();
            if (t.text == "while") return while_stmt();
            if (t.text == "for") return for_stmt();
            if (t.text == "return") return return_stmt();
        }
        auto s = simple_stmt();
        s->toks.push_back(expect(";"));
        return s;
    }

    PPtr declaration() {
        auto d = make(AstKind::Decl);
        type_spec(*d, false);
        d->toks.push_back(expect_ident());
        if (check("[")) {
            d->toks.push_back(take());
            if (at_end() || peek().kind != TokenKind::IntLiteral) fail({"integer literal"});
            auto size = make(AstKind::Literal);
            size->toks.push_back(take());
            d->kids.push_back(std::move(size));
            d->toks.push_back(expect("]"));
        }
        if (check("=")) {
            d->toks.push_back(take());
            d->kids.push_back(expression());
        }
        if (check(","))
            throw UnsupportedConstruct("multiple declarators at line " + std::to_string(peek().line));
        d->toks.push_back(expect(";"));
        return d;
    }

    // assignment or call, without the terminator
    PPtr simple_stmt() {
        const Token& first = peek();
        auto lhs = expression();
        if (check("=")) {
            const bool lvalue = lhs->kind == AstKind::Identifier || lhs->kind == AstKind::Index ||
                                (lhs->kind == AstKind::UnaryOp && toks_[lhs->toks.front()].text == "*");
            if (!lvalue)
                throw SyntaxError(first.line, first.col, {"identifier", "index expression", "*"},
                                  "non-assignable expression");
            auto a = make(AstKind::Assign);
            a->toks.push_back(take());
            a->kids.push_back(std::move(lhs));
            a->kids.push_back(expression());
            return a;
        }
        if (lhs->kind == AstKind::Call) return lhs;
        fail({"="});
    }

    PPtr if_stmt() {
        auto s = make(AstKind::If);
        s->toks.push_back(take());
        s->toks.push_back(expect("("));
        s->kids.push_back(expression());
        s->toks.push_back(expect(")"));
        s->kids.push_back(statement());
        if (check("else")) {
            s->toks.push_back(take());
            s->kids.push_back(statement());
        }
        return s;
    }

    PPtr while_stmt() {
        auto s = make(AstKind::While);
        s->toks.push_back(take());
        s->toks.push_back(expect("("));
        s->kids.push_back(expression());
        s->toks.push_back(expect(")"));
        s->kids.push_back(statement());
        return s;
    }

    PPtr for_stmt() {
        auto s = make(AstKind::For);
        s->toks.push_back(take());
        s->toks.push_back(expect("("));
        if (check("int") || check("char")) {
            s->kids.push_back(declaration());
        } else {
            auto init = simple_stmt();
            init->toks.push_back(expect(";"));
            s->kids.push_back(std::move(init));
        }
        s->kids.push_back(expression());
        s->toks.push_back(expect(";"));
        auto step = simple_stmt();
        if (step->kind != AstKind::Assign) fail({"="});
        s->kids.push_back(std::move(step));
        s->toks.push_back(expect(")"));
        s->kids.push_back(statement());
        return s;
    }

    PPtr return_stmt() {
        auto s = make(AstKind::Return);
        s->toks.push_back(take());
        if (!check(";")) s->kids.push_back(expression());
        s->toks.push_back(expect(";"));
        return s;
    }

    // precedence climbing over the supported binary operators
    static int precedence(const Token& t) {
        if (t.kind != TokenKind::Operator) return -1;
        const auto& s = t.text;
        if (s == "||") return 1;
        if (s == "&&") return 2;
        if (s == "==" || s == "!=") return 3;
        if (s == "<" || s == "<=" || s == ">" || s == ">=") return 4;
        if (s == "+" || s == "-") return 5;
        if (s == "*" || s == "/" || s == "%") return 6;
        if (s == "&") return 0; // binary '&' is outside the subset
        return -1;
    }

    PPtr expression(int min_prec = 1) {
        auto lhs = unary();
        for (;;) {
            if (at_end()) return lhs;
            const int p = precedence(peek());
            if (p == 0)
                throw UnsupportedConstruct("binary '&' at line " + std::to_string(peek().line));
            if (p < min_prec) {
                screen(peek());
                return lhs;
            }
            auto op = make(AstKind::BinaryOp);
            op->toks.push_back(take());
            auto rhs = expression(p + 1);
            op->kids.push_back(std::move(lhs));
            op->kids.push_back(std::move(rhs));
            lhs = std::move(op);
        }
    }

    PPtr unary() {
        if (check("-") || check("!") || check("*") || check("&")) {
            auto u = make(AstKind::UnaryOp);
            u->toks.push_back(take());
            u->kids.push_back(unary());
            return u;
        }
        return postfix();
    }

    PPtr postfix() {
        auto e = primary();
        while (check("[")) {
            auto ix = make(AstKind::Index);
            ix->toks.push_back(take());
            ix->kids.push_back(std::move(e));
            ix->kids.push_back(expression());
            ix->toks.push_back(expect("]"));
            e = std::move(ix);
        }
        return e;
    }

    PPtr primary() {
        if (at_end()) fail({"identifier", "literal", "("});
        const Token& t = peek();
        screen(t);
        if (t.kind == TokenKind::Identifier) {
            const int name = take();
            if (check("(")) {
                auto call = make(AstKind::Call);
                call->toks.push_back(name);
                call->toks.push_back(take());
                if (!check(")")) {
                    for (;;) {
                        call->kids.push_back(expression());
                        if (!check(",")) break;
                        call->toks.push_back(take());
                    }
                }
                call->toks.push_back(expect(")"));
                return call;
            }
            auto id = make(AstKind::Identifier);
            id->toks.push_back(name);
            return id;
        }
        if (t.kind == TokenKind::IntLiteral || t.kind == TokenKind::StringLiteral) {
            auto lit = make(AstKind::Literal);
            lit->toks.push_back(take());
            return lit;
        }
        if (check("(")) {
            const int open = take();
            auto inner = expression();
            inner->toks.push_back(open);
            inner->toks.push_back(expect(")"));
            return inner;
        }
        fail({"identifier", "literal", "("});
    }
};

void flatten(PNode& p, int parent, std::span<const Token> toks, Ast& ast) {
    const int id = static_cast<int>(ast.nodes.size());
    ast.nodes.emplace_back();
    {
        AstNode& n = ast.nodes.back();
        n.id = id;
        n.kind = p.kind;
        n.parent = parent;
        std::sort(p.toks.begin(), p.toks.end());
        n.token_pos = p.toks;
        for (int t : p.toks) n.tokens.push_back(toks[static_cast<std::size_t>(t)].text);
    }
    for (auto& k : p.kids) {
        const int child = static_cast<int>(ast.nodes.size());
        ast.nodes[static_cast<std::size_t>(id)].children.push_back(child);
        flatten(*k, id, toks, ast);
    }
    // line of the first token anywhere in the subtree (pre-order: ids id..end)
    int first = -1;
    for (std::size_t k = static_cast<std::size_t>(id); k < ast.nodes.size(); ++k)
        if (!ast.nodes[k].token_pos.empty() && (first < 0 || ast.nodes[k].token_pos.front() < first))
            first = ast.nodes[k].token_pos.front();
    ast.nodes[static_cast<std::size_t>(id)].line = first < 0 ? 1 : toks[static_cast<std::size_t>(first)].line;
}

} // namespace

Ast parse(std::span<const Token> tokens) {
    Parser p(tokens);
    auto root = p.function();
    Ast ast;
    flatten(*root, -1, tokens, ast);
    return ast;
}

} // namespace vloc::minic
