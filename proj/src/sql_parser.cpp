#include <algorithm>
#include <cctype>

#include "nl2sql/error.hpp"
#include "nl2sql/sql_ast.hpp"
#include "sql_lexer.hpp"

namespace nl2sql::sql {
namespace {

std::string upper(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view sql) : tokens_(tokenize(sql)) {}

  Query parse_statement() {
    Query query = parse_query();
    while (peek_symbol(";")) advance();
    if (current().kind != TokenKind::end) fail("unexpected trailing input");
    return query;
  }

 private:
  // ---- token helpers -----------------------------------------------------

  const Token& current() const { return tokens_[pos_]; }
  const Token& peek(std::size_t ahead = 1) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() {
    const Token& token = tokens_[pos_];
    if (token.kind != TokenKind::end) ++pos_;
    return token;
  }
  std::size_t previous_end() const { return pos_ == 0 ? 0 : tokens_[pos_ - 1].end; }

  [[noreturn]] void fail(const std::string& message) const {
    const auto& token = current();
    std::string found = token.kind == TokenKind::end ? "end of input" : "'" + token.text + "'";
    throw ParseError(message + " (found " + found + ")", token.begin);
  }

  bool peek_keyword(std::string_view keyword, std::size_t ahead = 0) const {
    return is_keyword(peek(ahead), keyword);
  }
  bool peek_symbol(std::string_view symbol, std::size_t ahead = 0) const {
    const auto& token = peek(ahead);
    return token.kind == TokenKind::symbol && token.text == symbol;
  }
  bool accept_keyword(std::string_view keyword) {
    if (!peek_keyword(keyword)) return false;
    advance();
    return true;
  }
  bool accept_symbol(std::string_view symbol) {
    if (!peek_symbol(symbol)) return false;
    advance();
    return true;
  }
  void expect_keyword(std::string_view keyword) {
    if (!accept_keyword(keyword)) fail("expected " + std::string(keyword));
  }
  void expect_symbol(std::string_view symbol) {
    if (!accept_symbol(symbol)) fail("expected '" + std::string(symbol) + "'");
  }

  bool at_identifier() const {
    const auto& token = current();
    if (token.kind == TokenKind::quoted_identifier) return true;
    return token.kind == TokenKind::identifier && !is_reserved(token.text);
  }
  std::string identifier(const char* what) {
    if (!at_identifier()) fail(std::string("expected ") + what);
    return advance().value;
  }

  bool at_query_start(std::size_t ahead = 0) const {
    return peek_keyword("SELECT", ahead) || peek_keyword("WITH", ahead) ||
           peek_keyword("VALUES", ahead);
  }

  // Consumes a balanced token run and returns the token texts joined by
  // single spaces. Starts at an opening parenthesis.
  std::string balanced_text() {
    std::string text;
    int depth = 0;
    do {
      const auto& token = current();
      if (token.kind == TokenKind::end) fail("unbalanced parentheses");
      if (token.kind == TokenKind::symbol && token.text == "(") ++depth;
      if (token.kind == TokenKind::symbol && token.text == ")") --depth;
      if (!text.empty()) text.push_back(' ');
      text += token.text;
      advance();
    } while (depth > 0);
    return text;
  }

  // ---- queries -----------------------------------------------------------

  Query parse_query() {
    Query query;
    query.span.begin = current().begin;
    if (accept_keyword("WITH")) {
      query.recursive = accept_keyword("RECURSIVE");
      do {
        Cte cte;
        cte.span.begin = current().begin;
        cte.name = identifier("common table expression name");
        if (accept_symbol("(")) {
          do {
            cte.columns.push_back(identifier("column name"));
          } while (accept_symbol(","));
          expect_symbol(")");
        }
        expect_keyword("AS");
        if (accept_keyword("NOT")) expect_keyword("MATERIALIZED");
        else accept_keyword("MATERIALIZED");
        expect_symbol("(");
        cte.query = parse_query();
        expect_symbol(")");
        cte.span.end = previous_end();
        query.ctes.push_back(std::move(cte));
      } while (accept_symbol(","));
    }
    query.first = parse_core();
    while (true) {
      std::string op;
      if (accept_keyword("UNION")) {
        op = accept_keyword("ALL") ? "UNION ALL" : "UNION";
      } else if (accept_keyword("INTERSECT")) {
        op = "INTERSECT";
      } else if (accept_keyword("EXCEPT")) {
        op = "EXCEPT";
      } else {
        break;
      }
      query.compounds.push_back(CompoundTerm{op, parse_core()});
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      do {
        OrderTerm term;
        term.expr = parse_expr();
        if (accept_keyword("ASC")) term.direction = "ASC";
        else if (accept_keyword("DESC")) term.direction = "DESC";
        if (accept_keyword("NULLS")) {
          if (accept_keyword("FIRST")) term.nulls = "NULLS FIRST";
          else if (accept_keyword("LAST")) term.nulls = "NULLS LAST";
          else fail("expected FIRST or LAST");
        }
        query.order_by.push_back(std::move(term));
      } while (accept_symbol(","));
    }
    if (accept_keyword("LIMIT")) {
      Expr first = parse_expr();
      if (accept_keyword("OFFSET")) {
        query.limit = std::move(first);
        query.offset = parse_expr();
      } else if (accept_symbol(",")) {
        // LIMIT <offset>, <count>
        query.offset = std::move(first);
        query.limit = parse_expr();
      } else {
        query.limit = std::move(first);
      }
    }
    query.span.end = previous_end();
    return query;
  }

  SelectCore parse_core() {
    SelectCore core;
    core.span.begin = current().begin;
    if (peek_keyword("VALUES")) fail("VALUES lists are not supported as queries");
    expect_keyword("SELECT");
    if (accept_keyword("DISTINCT")) core.distinct = true;
    else accept_keyword("ALL");
    do {
      SelectItem item;
      item.span.begin = current().begin;
      item.expr = parse_expr();
      if (accept_keyword("AS")) {
        item.alias = alias_name();
      } else if (at_identifier() || current().kind == TokenKind::string) {
        item.alias = alias_name();
      }
      item.span.end = previous_end();
      core.projection.push_back(std::move(item));
    } while (accept_symbol(","));
    if (accept_keyword("FROM")) core.from = parse_from();
    if (accept_keyword("WHERE")) core.where = parse_expr();
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        core.group_by.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    if (accept_keyword("HAVING")) core.having = parse_expr();
    if (peek_keyword("WINDOW")) fail("WINDOW clauses are not supported");
    core.span.end = previous_end();
    return core;
  }

  std::string alias_name() {
    if (current().kind == TokenKind::string) return advance().value;
    return identifier("alias");
  }

  std::vector<JoinClause> parse_from() {
    std::vector<JoinClause> joins;
    JoinClause first;
    first.span.begin = current().begin;
    first.source = parse_source();
    first.span.end = previous_end();
    joins.push_back(std::move(first));
    while (true) {
      JoinClause join;
      join.span.begin = current().begin;
      if (accept_symbol(",")) {
        join.op = ",";
      } else {
        std::vector<std::string> words;
        while (peek_keyword("NATURAL") || peek_keyword("LEFT") ||
               peek_keyword("RIGHT") || peek_keyword("FULL") ||
               peek_keyword("INNER") || peek_keyword("CROSS") ||
               peek_keyword("OUTER")) {
          words.push_back(upper(advance().text));
        }
        if (!peek_keyword("JOIN")) {
          if (!words.empty()) fail("expected JOIN");
          break;
        }
        advance();
        words.push_back("JOIN");
        for (std::size_t i = 0; i < words.size(); ++i) {
          if (i > 0) join.op.push_back(' ');
          join.op += words[i];
        }
      }
      join.source = parse_source();
      if (accept_keyword("ON")) {
        join.on = parse_expr();
      } else if (accept_keyword("USING")) {
        expect_symbol("(");
        do {
          join.using_columns.push_back(identifier("column name"));
        } while (accept_symbol(","));
        expect_symbol(")");
      }
      join.span.end = previous_end();
      joins.push_back(std::move(join));
    }
    return joins;
  }

  TableSource parse_source() {
    TableSource source;
    source.span.begin = current().begin;
    if (peek_symbol("(")) {
      if (at_query_start(1) && !peek_keyword("VALUES", 1)) {
        advance();
        source.kind = SourceKind::subquery;
        source.query = parse_query();
        expect_symbol(")");
      } else {
        source.kind = SourceKind::opaque;
        source.name = balanced_text();
      }
    } else {
      source.kind = SourceKind::table;
      std::string name = identifier("table name");
      if (accept_symbol(".")) {
        source.schema = std::move(name);
        name = identifier("table name");
      }
      source.name = std::move(name);
      if (peek_symbol("(")) {
        // Table-valued function such as json_each(...).
        source.kind = SourceKind::opaque;
        source.name = (source.schema.empty() ? "" : source.schema + " . ") +
                      source.name + " " + balanced_text();
        source.schema.clear();
      }
    }
    if (accept_keyword("AS")) {
      source.alias = alias_name();
    } else if (at_identifier()) {
      source.alias = alias_name();
    }
    if (accept_keyword("INDEXED")) {
      expect_keyword("BY");
      identifier("index name");
    } else if (peek_keyword("NOT") && peek_keyword("INDEXED", 1)) {
      advance();
      advance();
    }
    source.span.end = previous_end();
    return source;
  }

  // ---- expressions -------------------------------------------------------

  Expr make(ExprKind kind, std::size_t begin) const {
    Expr expr;
    expr.kind = kind;
    expr.span = Span{begin, previous_end()};
    return expr;
  }

  Expr binary(std::string op, Expr left, Expr right) const {
    Expr expr;
    expr.kind = ExprKind::binary;
    expr.op = std::move(op);
    expr.span = Span{left.span.begin, right.span.end};
    expr.args.push_back(std::move(left));
    expr.args.push_back(std::move(right));
    return expr;
  }

  Expr parse_expr() { return parse_or(); }

  Expr parse_or() {
    Expr left = parse_and();
    while (accept_keyword("OR")) left = binary("OR", std::move(left), parse_and());
    return left;
  }

  Expr parse_and() {
    Expr left = parse_not();
    while (accept_keyword("AND")) left = binary("AND", std::move(left), parse_not());
    return left;
  }

  Expr parse_not() {
    const auto begin = current().begin;
    if (accept_keyword("NOT")) {
      Expr operand = parse_not();
      Expr expr = make(ExprKind::unary, begin);
      expr.op = "NOT";
      expr.args.push_back(std::move(operand));
      return expr;
    }
    return parse_equality();
  }

  Expr parse_equality() {
    Expr left = parse_comparison();
    while (true) {
      const auto begin = left.span.begin;
      const auto& token = current();
      if (token.kind == TokenKind::symbol &&
          (token.text == "=" || token.text == "==" || token.text == "!=" ||
           token.text == "<>")) {
        std::string op = advance().text;
        left = binary(std::move(op), std::move(left), parse_comparison());
        continue;
      }
      if (accept_keyword("IS")) {
        const bool negated = accept_keyword("NOT");
        if (accept_keyword("NULL")) {
          Expr expr;
          expr.kind = ExprKind::is_null;
          expr.negated = negated;
          expr.args.push_back(std::move(left));
          expr.span = Span{begin, previous_end()};
          left = std::move(expr);
          continue;
        }
        std::string op = negated ? "IS NOT" : "IS";
        if (accept_keyword("DISTINCT")) {
          expect_keyword("FROM");
          op += " DISTINCT FROM";
        }
        left = binary(std::move(op), std::move(left), parse_comparison());
        continue;
      }
      if (accept_keyword("ISNULL") || accept_keyword("NOTNULL")) {
        Expr expr;
        expr.kind = ExprKind::is_null;
        expr.negated = is_keyword(tokens_[pos_ - 1], "NOTNULL");
        expr.args.push_back(std::move(left));
        expr.span = Span{begin, previous_end()};
        left = std::move(expr);
        continue;
      }
      bool negated = false;
      if (peek_keyword("NOT") &&
          (peek_keyword("IN", 1) || peek_keyword("LIKE", 1) ||
           peek_keyword("GLOB", 1) || peek_keyword("REGEXP", 1) ||
           peek_keyword("MATCH", 1) || peek_keyword("BETWEEN", 1) ||
           peek_keyword("NULL", 1))) {
        advance();
        negated = true;
      }
      if (negated && accept_keyword("NULL")) {
        Expr expr;
        expr.kind = ExprKind::is_null;
        expr.negated = true;
        expr.args.push_back(std::move(left));
        expr.span = Span{begin, previous_end()};
        left = std::move(expr);
        continue;
      }
      if (accept_keyword("IN")) {
        Expr expr;
        expr.negated = negated;
        expr.args.push_back(std::move(left));
        if (accept_symbol("(")) {
          if (at_query_start()) {
            expr.kind = ExprKind::in_query;
            expr.query = parse_query();
          } else {
            expr.kind = ExprKind::in_list;
            if (!peek_symbol(")")) {
              do {
                expr.args.push_back(parse_expr());
              } while (accept_symbol(","));
            }
          }
          expect_symbol(")");
        } else {
          // IN <table>: keep the target as an opaque operand.
          expr.kind = ExprKind::in_list;
          Expr target;
          target.kind = ExprKind::opaque;
          const auto target_begin = current().begin;
          target.op = identifier("table name");
          if (accept_symbol(".")) target.op += " . " + identifier("table name");
          target.span = Span{target_begin, previous_end()};
          expr.args.push_back(std::move(target));
          expr.op = "TABLE";
        }
        expr.span = Span{begin, previous_end()};
        left = std::move(expr);
        continue;
      }
      if (peek_keyword("LIKE") || peek_keyword("GLOB") || peek_keyword("REGEXP") ||
          peek_keyword("MATCH")) {
        Expr expr;
        expr.kind = ExprKind::like;
        expr.op = upper(advance().text);
        expr.negated = negated;
        expr.args.push_back(std::move(left));
        expr.args.push_back(parse_comparison());
        if (accept_keyword("ESCAPE")) expr.args.push_back(parse_comparison());
        expr.span = Span{begin, previous_end()};
        left = std::move(expr);
        continue;
      }
      if (accept_keyword("BETWEEN")) {
        Expr expr;
        expr.kind = ExprKind::between;
        expr.negated = negated;
        expr.args.push_back(std::move(left));
        expr.args.push_back(parse_comparison());
        expect_keyword("AND");
        expr.args.push_back(parse_comparison());
        expr.span = Span{begin, previous_end()};
        left = std::move(expr);
        continue;
      }
      if (negated) fail("expected IN, LIKE, BETWEEN or NULL after NOT");
      return left;
    }
  }

  template <class Next>
  Expr parse_left_assoc(std::initializer_list<std::string_view> ops, Next next) {
    Expr left = (this->*next)();
    while (true) {
      const auto& token = current();
      if (token.kind != TokenKind::symbol) return left;
      if (std::find(ops.begin(), ops.end(), token.text) == ops.end()) return left;
      std::string op = advance().text;
      left = binary(std::move(op), std::move(left), (this->*next)());
    }
  }

  Expr parse_comparison() {
    return parse_left_assoc({"<", "<=", ">", ">="}, &Parser::parse_bitwise);
  }
  Expr parse_bitwise() {
    return parse_left_assoc({"<<", ">>", "&", "|"}, &Parser::parse_additive);
  }
  Expr parse_additive() {
    return parse_left_assoc({"+", "-"}, &Parser::parse_multiplicative);
  }
  Expr parse_multiplicative() {
    return parse_left_assoc({"*", "/", "%"}, &Parser::parse_concat);
  }
  Expr parse_concat() {
    return parse_left_assoc({"||", "->", "->>"}, &Parser::parse_unary);
  }

  Expr parse_unary() {
    const auto begin = current().begin;
    if (peek_symbol("-") || peek_symbol("+") || peek_symbol("~")) {
      std::string op = advance().text;
      Expr operand = parse_unary();
      Expr expr = make(ExprKind::unary, begin);
      expr.op = std::move(op);
      expr.args.push_back(std::move(operand));
      return expr;
    }
    return parse_collate();
  }

  Expr parse_collate() {
    Expr expr = parse_primary();
    while (accept_keyword("COLLATE")) {
      Expr wrapped;
      wrapped.kind = ExprKind::collate;
      const auto& token = current();
      if (token.kind != TokenKind::identifier && token.kind != TokenKind::quoted_identifier) {
        fail("expected collation name");
      }
      wrapped.op = advance().value;
      wrapped.span = Span{expr.span.begin, previous_end()};
      wrapped.args.push_back(std::move(expr));
      expr = std::move(wrapped);
    }
    return expr;
  }

  Expr parse_primary() {
    const auto begin = current().begin;
    const Token& token = current();
    switch (token.kind) {
      case TokenKind::number: {
        advance();
        Expr expr = make(ExprKind::literal, begin);
        expr.literal_kind = LiteralKind::number;
        expr.op = token.text;
        return expr;
      }
      case TokenKind::string: {
        std::string value = advance().value;
        Expr expr = make(ExprKind::literal, begin);
        expr.literal_kind = LiteralKind::string;
        expr.op = std::move(value);
        return expr;
      }
      case TokenKind::blob: {
        std::string text = advance().text;
        Expr expr = make(ExprKind::literal, begin);
        expr.literal_kind = LiteralKind::blob;
        expr.op = std::move(text);
        return expr;
      }
      case TokenKind::parameter: {
        std::string text = advance().text;
        Expr expr = make(ExprKind::opaque, begin);
        expr.op = std::move(text);
        return expr;
      }
      case TokenKind::end:
        fail("expected expression");
      default:
        break;
    }
    if (accept_symbol("(")) {
      if (at_query_start()) {
        Query query = parse_query();
        expect_symbol(")");
        Expr expr = make(ExprKind::subquery, begin);
        expr.query = std::move(query);
        return expr;
      }
      Expr inner = parse_expr();
      if (accept_symbol(",")) {
        // Row value: represented as an unnamed function.
        Expr row;
        row.kind = ExprKind::function;
        row.args.push_back(std::move(inner));
        do {
          row.args.push_back(parse_expr());
        } while (accept_symbol(","));
        expect_symbol(")");
        row.span = Span{begin, previous_end()};
        return row;
      }
      expect_symbol(")");
      return inner;
    }
    if (accept_symbol("*")) return make(ExprKind::star, begin);
    if (token.kind == TokenKind::identifier) {
      if (accept_keyword("NULL")) {
        Expr expr = make(ExprKind::literal, begin);
        expr.literal_kind = LiteralKind::null;
        expr.op = "NULL";
        return expr;
      }
      for (auto keyword : {"CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP",
                           "TRUE", "FALSE"}) {
        if (accept_keyword(keyword)) {
          Expr expr = make(ExprKind::literal, begin);
          expr.literal_kind = LiteralKind::keyword;
          expr.op = keyword;
          return expr;
        }
      }
      if (accept_keyword("CASE")) return parse_case(begin);
      if (accept_keyword("CAST")) {
        expect_symbol("(");
        Expr value = parse_expr();
        expect_keyword("AS");
        std::string type;
        while (!peek_symbol(")")) {
          if (current().kind == TokenKind::end) fail("unterminated CAST");
          if (peek_symbol("(")) {
            type += balanced_text();
            continue;
          }
          if (!type.empty()) type.push_back(' ');
          type += upper(advance().text);
        }
        expect_symbol(")");
        if (type.empty()) fail("expected type name");
        Expr expr = make(ExprKind::cast, begin);
        expr.op = std::move(type);
        expr.args.push_back(std::move(value));
        return expr;
      }
      if (accept_keyword("EXISTS")) {
        expect_symbol("(");
        Query query = parse_query();
        expect_symbol(")");
        Expr expr = make(ExprKind::exists, begin);
        expr.query = std::move(query);
        return expr;
      }
      if (peek_keyword("RAISE") && peek_symbol("(", 1)) {
        advance();
        Expr expr;
        expr.kind = ExprKind::opaque;
        expr.op = "RAISE " + balanced_text();
        expr.span = Span{begin, previous_end()};
        return expr;
      }
    }
    if (token.kind == TokenKind::identifier && peek_symbol("(", 1) &&
        !is_reserved(token.text)) {
      return parse_function(begin);
    }
    if (!at_identifier()) fail("expected expression");
    const bool double_quoted =
        token.kind == TokenKind::quoted_identifier && token.text.front() == '"';
    std::string first = advance().value;
    if (accept_symbol(".")) {
      if (accept_symbol("*")) {
        Expr expr = make(ExprKind::star, begin);
        expr.qualifier = std::move(first);
        return expr;
      }
      std::string second = identifier("column name");
      if (accept_symbol(".")) {
        // schema.table.column: the schema is not kept.
        if (accept_symbol("*")) {
          Expr expr = make(ExprKind::star, begin);
          expr.qualifier = std::move(second);
          return expr;
        }
        std::string third = identifier("column name");
        Expr expr = make(ExprKind::column, begin);
        expr.qualifier = std::move(second);
        expr.name = std::move(third);
        return expr;
      }
      Expr expr = make(ExprKind::column, begin);
      expr.qualifier = std::move(first);
      expr.name = std::move(second);
      return expr;
    }
    Expr expr = make(ExprKind::column, begin);
    expr.name = std::move(first);
    expr.double_quoted = double_quoted;
    return expr;
  }

  Expr parse_function(std::size_t begin) {
    Expr expr;
    expr.kind = ExprKind::function;
    expr.op = advance().text;
    expect_symbol("(");
    if (accept_keyword("DISTINCT")) expr.distinct = true;
    else accept_keyword("ALL");
    if (peek_symbol("*") && peek_symbol(")", 1)) {
      const auto star_begin = current().begin;
      advance();
      expr.args.push_back(make(ExprKind::star, star_begin));
    } else if (!peek_symbol(")")) {
      do {
        expr.args.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    expect_symbol(")");
    std::string window;
    if (peek_keyword("FILTER") && peek_symbol("(", 1)) {
      advance();
      window = "FILTER " + balanced_text();
    }
    if (accept_keyword("OVER")) {
      if (!window.empty()) window.push_back(' ');
      if (peek_symbol("(")) {
        window += "OVER " + balanced_text();
      } else {
        window += "OVER " + identifier("window name");
      }
    }
    expr.window = std::move(window);
    expr.span = Span{begin, previous_end()};
    return expr;
  }

  Expr parse_case(std::size_t begin) {
    Expr expr;
    expr.kind = ExprKind::case_when;
    if (!peek_keyword("WHEN")) {
      expr.has_operand = true;
      expr.args.push_back(parse_expr());
    }
    if (!peek_keyword("WHEN")) fail("expected WHEN");
    while (accept_keyword("WHEN")) {
      expr.args.push_back(parse_expr());
      expect_keyword("THEN");
      expr.args.push_back(parse_expr());
    }
    if (accept_keyword("ELSE")) {
      expr.has_else = true;
      expr.args.push_back(parse_expr());
    }
    expect_keyword("END");
    expr.span = Span{begin, previous_end()};
    return expr;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

Query parse(std::string_view sql) { return Parser(sql).parse_statement(); }

bool has_top_level_order_by(std::string_view sql) {
  int depth = 0;
  std::size_t i = 0;
  auto word_at = [&](std::size_t pos, std::string_view word) {
    if (pos + word.size() > sql.size()) return false;
    for (std::size_t k = 0; k < word.size(); ++k) {
      if (std::toupper(static_cast<unsigned char>(sql[pos + k])) != word[k]) return false;
    }
    const auto after = pos + word.size();
    const bool left_ok = pos == 0 || !(std::isalnum(static_cast<unsigned char>(sql[pos - 1])) ||
                                       sql[pos - 1] == '_');
    const bool right_ok = after >= sql.size() ||
                          !(std::isalnum(static_cast<unsigned char>(sql[after])) ||
                            sql[after] == '_');
    return left_ok && right_ok;
  };
  while (i < sql.size()) {
    const char c = sql[i];
    if (c == '\'' || c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      ++i;
      while (i < sql.size() && sql[i] != close) ++i;
      ++i;
      continue;
    }
    if (sql.compare(i, 2, "--") == 0) {
      while (i < sql.size() && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && word_at(i, "ORDER")) {
      std::size_t j = i + 5;
      while (j < sql.size() && std::isspace(static_cast<unsigned char>(sql[j]))) ++j;
      if (word_at(j, "BY")) return true;
    }
    ++i;
  }
  return false;
}

}  // namespace nl2sql::sql
