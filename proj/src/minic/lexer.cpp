#include "vloc/minic/lexer.hpp"

#include <array>
#include <cctype>

namespace vloc::minic {

namespace {

// Reserved words include constructs the parser rejects (struct, switch, ...)
// so that they surface as UnsupportedConstruct rather than odd identifiers.
constexpr std::array kKeywords = {
    "break", "case",   "char",     "const", "continue", "default", "do",
    "double", "else",  "enum",     "float", "for",      "goto",    "if",
    "int",   "long",   "return",   "short", "signed",   "sizeof",  "static",
    "struct", "switch", "typedef", "union", "unsigned", "void",    "while",
};

// Longest match first.
constexpr std::array kOperators = {
    "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "*=",  "/=",  "%=", "&=", "|=", "^=", "<<", ">>", "->", "+",  "-",  "*",
    "/",   "%",   "=",  "<",  ">",  "!",  "&",  "|",  "^",  "~",  ".",  "?", ":",
};

constexpr std::string_view kPunctuation = "(){}[];,";

std::string where(int line, int col) {
    return "line " + std::to_string(line) + ", col " + std::to_string(col);
}

} // namespace

std::string_view to_string(TokenKind k) {
    switch (k) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::IntLiteral: return "int-literal";
    case TokenKind::StringLiteral: return "string-literal";
    case TokenKind::Operator: return "operator";
    case TokenKind::Punctuation: return "punctuation";
    }
    return "?";
}

bool is_keyword(std::string_view word) {
    for (auto k : kKeywords)
        if (word == k) return true;
    return false;
}

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1;
    int col = 1;

    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };

    while (i < src.size()) {
        const char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            const int l0 = line, c0 = col;
            advance(2);
            while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) advance(1);
            if (i + 1 >= src.size()) throw UnterminatedComment(where(l0, c0));
            advance(2);
            continue;
        }

        Token tok{TokenKind::Punctuation, "", line, col};
        const std::size_t start = i;
        const auto uc = static_cast<unsigned char>(c);

        if (std::isalpha(uc) || c == '_') {
            std::size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            tok.text = std::string(src.substr(start, j - start));
            tok.kind = is_keyword(tok.text) ? TokenKind::Keyword : TokenKind::Identifier;
        } else if (std::isdigit(uc)) {
            std::size_t j = i;
            if (c == '0' && j + 1 < src.size() && (src[j + 1] == 'x' || src[j + 1] == 'X')) {
                j += 2;
                while (j < src.size() && std::isxdigit(static_cast<unsigned char>(src[j]))) ++j;
            } else {
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            if (j < src.size() &&
                (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                throw IllegalCharacter("'" + std::string(1, src[j]) + "' in numeric literal at " +
                                       where(line, col + static_cast<int>(j - i)));
            tok.text = std::string(src.substr(start, j - start));
            tok.kind = TokenKind::IntLiteral;
        } else if (c == '"') {
            std::size_t j = i + 1;
            while (j < src.size() && src[j] != '"' && src[j] != '\n') {
                if (src[j] == '\\' && j + 1 < src.size() && src[j + 1] != '\n') ++j;
                ++j;
            }
            if (j >= src.size() || src[j] != '"') throw UnterminatedString(where(line, col));
            tok.text = std::string(src.substr(start, j + 1 - start));
            tok.kind = TokenKind::StringLiteral;
        } else if (kPunctuation.find(c) != std::string_view::npos) {
            tok.text = std::string(1, c);
            tok.kind = TokenKind::Punctuation;
        } else {
            for (std::string_view op : kOperators) {
                if (src.substr(i, op.size()) == op) {
                    tok.text = std::string(op);
                    tok.kind = TokenKind::Operator;
                    break;
                }
            }
            if (tok.text.empty())
                throw IllegalCharacter("'" + std::string(1, c) + "' at " + where(line, col));
        }
        advance(tok.text.size());
        out.push_back(std::move(tok));
    }
    return out;
}

} // namespace vloc::minic
