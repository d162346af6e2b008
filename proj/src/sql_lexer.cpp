#include "sql_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "nl2sql/error.hpp"

namespace nl2sql::sql {
namespace {

bool ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool ident_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) ==
                  std::toupper(static_cast<unsigned char>(y));
         });
}

// Reads a delimited run starting at sql[pos] (the opening delimiter); a
// doubled closing delimiter is an escaped literal character.
std::size_t read_delimited(std::string_view sql, std::size_t pos, char close,
                           std::string& value, bool doubling) {
  std::size_t i = pos + 1;
  while (i < sql.size()) {
    if (sql[i] == close) {
      if (doubling && i + 1 < sql.size() && sql[i + 1] == close) {
        value.push_back(close);
        i += 2;
        continue;
      }
      return i + 1;
    }
    value.push_back(sql[i]);
    ++i;
  }
  throw ParseError("unterminated quoted token", pos);
}

constexpr std::array<std::string_view, 18> kSymbols = {
    "->>", "||", "->", "<<", ">>", "<=", ">=", "==", "!=", "<>",
    "<",   ">",  "=",  "+",  "-",  "*",  "/",  "%"};

}  // namespace

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < sql.size()) {
    const auto c = static_cast<unsigned char>(sql[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (sql.compare(i, 2, "--") == 0) {
      while (i < sql.size() && sql[i] != '\n') ++i;
      continue;
    }
    if (sql.compare(i, 2, "/*") == 0) {
      const auto close = sql.find("*/", i + 2);
      i = close == std::string_view::npos ? sql.size() : close + 2;
      continue;
    }
    Token token;
    token.begin = i;
    if ((c == 'x' || c == 'X') && i + 1 < sql.size() && sql[i + 1] == '\'') {
      token.kind = TokenKind::blob;
      i = read_delimited(sql, i + 1, '\'', token.value, false);
    } else if (ident_start(c)) {
      token.kind = TokenKind::identifier;
      while (i < sql.size() && ident_char(static_cast<unsigned char>(sql[i]))) ++i;
      token.value = std::string(sql.substr(token.begin, i - token.begin));
    } else if (std::isdigit(c) ||
               (c == '.' && i + 1 < sql.size() &&
                std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      token.kind = TokenKind::number;
      if (c == '0' && i + 1 < sql.size() && (sql[i + 1] == 'x' || sql[i + 1] == 'X')) {
        i += 2;
        while (i < sql.size() && std::isxdigit(static_cast<unsigned char>(sql[i]))) ++i;
      } else {
        while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        if (i < sql.size() && sql[i] == '.') {
          ++i;
          while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        }
        if (i < sql.size() && (sql[i] == 'e' || sql[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < sql.size() && (sql[j] == '+' || sql[j] == '-')) ++j;
          if (j < sql.size() && std::isdigit(static_cast<unsigned char>(sql[j]))) {
            i = j;
            while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
          }
        }
      }
      token.value = std::string(sql.substr(token.begin, i - token.begin));
    } else if (c == '\'') {
      token.kind = TokenKind::string;
      i = read_delimited(sql, i, '\'', token.value, true);
    } else if (c == '"' || c == '`') {
      token.kind = TokenKind::quoted_identifier;
      i = read_delimited(sql, i, static_cast<char>(c), token.value, true);
    } else if (c == '[') {
      token.kind = TokenKind::quoted_identifier;
      i = read_delimited(sql, i, ']', token.value, false);
    } else if (c == '?' || c == ':' || c == '@' || c == '$') {
      token.kind = TokenKind::parameter;
      ++i;
      while (i < sql.size() && ident_char(static_cast<unsigned char>(sql[i]))) ++i;
    } else {
      token.kind = TokenKind::symbol;
      std::size_t length = 1;
      for (auto symbol : kSymbols) {
        if (sql.compare(i, symbol.size(), symbol) == 0) {
          length = symbol.size();
          break;
        }
      }
      if (length == 1 && std::string_view("<>=+-*/%(),.;&|~").find(static_cast<char>(c)) ==
                             std::string_view::npos) {
        throw ParseError(std::string("unexpected character '") +
                             static_cast<char>(c) + "'",
                         i);
      }
      i += length;
      token.value = std::string(sql.substr(token.begin, length));
    }
    token.end = i;
    token.text = std::string(sql.substr(token.begin, i - token.begin));
    tokens.push_back(std::move(token));
  }
  Token end;
  end.kind = TokenKind::end;
  end.begin = end.end = sql.size();
  tokens.push_back(std::move(end));
  return tokens;
}

bool is_keyword(const Token& token, std::string_view keyword) {
  return token.kind == TokenKind::identifier && iequals(token.text, keyword);
}

bool is_reserved(std::string_view word) {
  static constexpr std::array<std::string_view, 61> kReserved = {
      "ALL",     "AND",       "AS",        "ASC",
      "BETWEEN", "BY",        "CASE",      "CAST",
      "COLLATE", "CROSS",     "CURRENT_DATE", "CURRENT_TIME",
      "CURRENT_TIMESTAMP", "DESC", "DISTINCT", "ELSE",
      "END",     "ESCAPE",    "EXCEPT",    "EXISTS",
      "FALSE",   "FILTER",    "FROM",      "FULL",
      "GLOB",    "GROUP",     "HAVING",    "IN",
      "INNER",   "INTERSECT", "IS",        "ISNULL",
      "JOIN",    "LEFT",      "LIKE",      "LIMIT",
      "MATCH",   "NATURAL",   "NOT",       "NOTNULL",
      "NULL",    "OFFSET",    "ON",        "OR",
      "ORDER",   "OUTER",     "OVER",      "REGEXP",
      "RIGHT",   "SELECT",    "THEN",      "TRUE",
      "UNION",   "USING",     "VALUES",    "WHEN",
      "WHERE",   "WINDOW",    "WITH",      "RECURSIVE",
      "RAISE"};
  return std::any_of(kReserved.begin(), kReserved.end(),
                     [&](std::string_view r) { return iequals(r, word); });
}

}  // namespace nl2sql::sql
