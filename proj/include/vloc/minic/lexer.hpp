#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vloc/common/error.hpp"

namespace vloc::minic {

VLOC_DEFINE_ERROR(UnterminatedString);
VLOC_DEFINE_ERROR(UnterminatedComment);
VLOC_DEFINE_ERROR(IllegalCharacter);

enum class TokenKind { Keyword, Identifier, IntLiteral, StringLiteral, Operator, Punctuation };

std::string_view to_string(TokenKind k);

struct Token {
    TokenKind kind;
    std::string text;
    int line = 1; // 1-based
    int col = 1;  // 1-based, in bytes

    bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
    friend bool operator==(const Token&, const Token&) = default;
};

bool is_keyword(std::string_view word);

/// Splits MiniC source into tokens. Comments and whitespace are dropped;
/// positions refer to the original text.
std::vector<Token> tokenize(std::string_view source);

} // namespace vloc::minic
