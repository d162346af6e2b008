#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nl2sql::sql {

enum class TokenKind {
  identifier,         // bare word, may be a keyword
  quoted_identifier,  // "x", `x` or [x]; never a keyword
  string,
  number,
  blob,
  parameter,
  symbol,
  end,
};

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;   // raw source text
  std::string value;  // unquoted identifier / unescaped string contents
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Splits SQL into tokens, dropping whitespace and comments. The result always
// ends with a TokenKind::end token. Throws ParseError on unterminated input.
std::vector<Token> tokenize(std::string_view sql);

bool is_keyword(const Token& token, std::string_view keyword);

// Words that cannot serve as bare identifiers or implicit aliases.
bool is_reserved(std::string_view word);

}  // namespace nl2sql::sql
