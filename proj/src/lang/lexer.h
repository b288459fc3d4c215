#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace loopinv::detail {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

/// Splits C-like source into tokens. Comments and preprocessor lines are
/// dropped. Float literals raise ParseError(FloatLiteral).
std::vector<Token> lex(std::string_view source);

}  // namespace loopinv::detail
