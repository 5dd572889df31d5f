#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vloc/minic/ast.hpp"

namespace vloc::minic {

class SyntaxError : public Error {
  public:
    SyntaxError(int line, int col, std::vector<std::string> expected, const std::string& found);

    int line() const noexcept { return line_; }
    int col() const noexcept { return col_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

  private:
    int line_;
    int col_;
    std::vector<std::string> expected_;
};

VLOC_DEFINE_ERROR(UnsupportedConstruct);

/// Parses exactly one MiniC function definition.
Ast parse(std::span<const Token> tokens);

inline Ast parse_source(std::string_view source) { return parse(tokenize(source)); }

} // namespace vloc::minic
