#include "lexer.h"

#include <array>
#include <cctype>

#include "loopinv/parser.h"

namespace loopinv::detail {

namespace {

constexpr std::array<std::string_view, 16> kMultiPunct = {
    "==>", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "->", "<<"};

constexpr std::string_view kSinglePunct = "(){};,=<>+-*/%!?:[]&|.~^";

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '\\'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  bool line_start = true;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
        line_start = true;
      } else {
        ++col;
      }
    }
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == '\n' || std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (line_start && c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    line_start = false;
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (src.substr(i, 2) == "/*") {
      std::size_t end = src.find("*/", i + 2);
      if (end == std::string_view::npos) {
        throw ParseError(DiagCode::Syntax, "unterminated comment", line, col);
      }
      advance(end + 2 - i);
      line_start = false;
      continue;
    }
    const int tok_line = line;
    const int tok_col = col;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      bool hex = false;
      if (src.substr(i, 2) == "0x" || src.substr(i, 2) == "0X") {
        hex = true;
        j += 2;
        while (j < src.size() && std::isxdigit(static_cast<unsigned char>(src[j]))) ++j;
      } else {
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      bool is_float = false;
      if (!hex && j < src.size() && (src[j] == '.' || src[j] == 'e' || src[j] == 'E')) is_float = true;
      if (!hex && j < src.size() && (src[j] == 'f' || src[j] == 'F')) is_float = true;
      if (is_float) {
        throw ParseError(DiagCode::FloatLiteral, "floating-point literals are not supported", tok_line,
                         tok_col);
      }
      if (j < src.size() && ident_char(src[j])) {
        throw ParseError(DiagCode::Syntax, "malformed integer literal", tok_line, tok_col);
      }
      out.push_back({Tok::Int, std::string(src.substr(i, j - i)), tok_line, tok_col});
      advance(j - i);
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < src.size() && ident_char(src[j])) ++j;
      if (c == '\\' && j == i + 1) {
        throw ParseError(DiagCode::Syntax, "stray '\\'", tok_line, tok_col);
      }
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), tok_line, tok_col});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (std::string_view p : kMultiPunct) {
      if (src.substr(i, p.size()) == p) {
        out.push_back({Tok::Punct, std::string(p), tok_line, tok_col});
        advance(p.size());
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (kSinglePunct.find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), tok_line, tok_col});
      advance(1);
      continue;
    }
    throw ParseError(DiagCode::Syntax, std::string("unexpected character '") + c + "'", tok_line, tok_col);
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

}  // namespace loopinv::detail
