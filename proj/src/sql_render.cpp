#include <algorithm>
#include <cctype>

#include "nl2sql/sql_ast.hpp"
#include "sql_lexer.hpp"

namespace nl2sql::sql {
namespace {

constexpr int kOr = 1;
constexpr int kAnd = 2;
constexpr int kNot = 3;
constexpr int kEquality = 4;
constexpr int kComparison = 5;
constexpr int kBitwise = 6;
constexpr int kAdditive = 7;
constexpr int kMultiplicative = 8;
constexpr int kConcat = 9;
constexpr int kUnary = 10;
constexpr int kCollate = 11;
constexpr int kPrimary = 12;

int binary_precedence(const std::string& op) {
  if (op == "OR") return kOr;
  if (op == "AND") return kAnd;
  if (op == "<" || op == "<=" || op == ">" || op == ">=") return kComparison;
  if (op == "<<" || op == ">>" || op == "&" || op == "|") return kBitwise;
  if (op == "+" || op == "-") return kAdditive;
  if (op == "*" || op == "/" || op == "%") return kMultiplicative;
  if (op == "||" || op == "->" || op == "->>") return kConcat;
  return kEquality;  // = == != <> IS ...
}

int precedence(const Expr& expr) {
  switch (expr.kind) {
    case ExprKind::binary:
      return binary_precedence(expr.op);
    case ExprKind::unary:
      return expr.op == "NOT" ? kNot : kUnary;
    case ExprKind::between:
    case ExprKind::in_list:
    case ExprKind::in_query:
    case ExprKind::like:
    case ExprKind::is_null:
      return kEquality;
    case ExprKind::collate:
      return kCollate;
    default:
      return kPrimary;
  }
}

bool is_simple(std::string_view name) {
  if (name.empty()) return false;
  const auto first = static_cast<unsigned char>(name[0]);
  if (!(std::isalpha(first) || first == '_')) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

std::string ident(std::string_view name) {
  if (is_simple(name) && !is_reserved(name)) return std::string(name);
  std::string out = "`";
  for (char c : name) {
    if (c == '`') out.push_back('`');
    out.push_back(c);
  }
  out.push_back('`');
  return out;
}

std::string string_literal(std::string_view value) {
  std::string out = "'";
  for (char c : value) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

class Renderer {
 public:
  std::string expr(const Expr& e) {
    switch (e.kind) {
      case ExprKind::literal:
        if (e.literal_kind == LiteralKind::string) return string_literal(e.op);
        return e.op;
      case ExprKind::column:
        if (e.double_quoted && e.qualifier.empty()) {
          std::string out = "\"";
          for (char c : e.name) {
            if (c == '"') out.push_back('"');
            out.push_back(c);
          }
          return out + "\"";
        }
        return e.qualifier.empty() ? ident(e.name)
                                   : ident(e.qualifier) + "." + ident(e.name);
      case ExprKind::star:
        return e.qualifier.empty() ? "*" : ident(e.qualifier) + ".*";
      case ExprKind::unary: {
        if (e.op == "NOT") return "NOT " + child(e.args[0], kNot, false);
        std::string operand = child(e.args[0], kUnary, false);
        if (!operand.empty() && (operand[0] == '-' || operand[0] == '+')) {
          return e.op + " " + operand;
        }
        return e.op + operand;
      }
      case ExprKind::binary: {
        const int p = binary_precedence(e.op);
        return child(e.args[0], p, false) + " " + e.op + " " +
               child(e.args[1], p, true);
      }
      case ExprKind::function: {
        std::string out = e.op + "(";
        if (e.distinct) out += "DISTINCT ";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (i > 0) out += ", ";
          out += expr(e.args[i]);
        }
        out += ")";
        if (!e.window.empty()) out += " " + e.window;
        return out;
      }
      case ExprKind::case_when: {
        std::string out = "CASE";
        std::size_t i = 0;
        if (e.has_operand) out += " " + expr(e.args[i++]);
        const std::size_t stop = e.args.size() - (e.has_else ? 1 : 0);
        for (; i + 2 <= stop; i += 2) {
          out += " WHEN " + expr(e.args[i]) + " THEN " + expr(e.args[i + 1]);
        }
        if (e.has_else) out += " ELSE " + expr(e.args.back());
        return out + " END";
      }
      case ExprKind::cast:
        return "CAST(" + expr(e.args[0]) + " AS " + e.op + ")";
      case ExprKind::between:
        return child(e.args[0], kEquality, false) +
               (e.negated ? " NOT BETWEEN " : " BETWEEN ") +
               child(e.args[1], kEquality, true) + " AND " +
               child(e.args[2], kEquality, true);
      case ExprKind::in_list: {
        std::string out = child(e.args[0], kEquality, false) +
                          (e.negated ? " NOT IN " : " IN ");
        if (e.op == "TABLE") return out + e.args[1].op;
        out += "(";
        for (std::size_t i = 1; i < e.args.size(); ++i) {
          if (i > 1) out += ", ";
          out += expr(e.args[i]);
        }
        return out + ")";
      }
      case ExprKind::in_query:
        return child(e.args[0], kEquality, false) +
               (e.negated ? " NOT IN (" : " IN (") + query(*e.query) + ")";
      case ExprKind::like: {
        std::string out = child(e.args[0], kEquality, false) +
                          (e.negated ? " NOT " : " ") + e.op + " " +
                          child(e.args[1], kEquality, true);
        if (e.args.size() > 2) out += " ESCAPE " + child(e.args[2], kEquality, true);
        return out;
      }
      case ExprKind::is_null:
        return child(e.args[0], kEquality, false) +
               (e.negated ? " IS NOT NULL" : " IS NULL");
      case ExprKind::exists:
        return "EXISTS (" + query(*e.query) + ")";
      case ExprKind::subquery:
        return "(" + query(*e.query) + ")";
      case ExprKind::collate:
        return child(e.args[0], kPrimary, false) + " COLLATE " + ident(e.op);
      case ExprKind::opaque:
        return e.op;
    }
    return e.op;
  }

  std::string query(const Query& q) {
    std::string out;
    if (!q.ctes.empty()) {
      out += q.recursive ? "WITH RECURSIVE " : "WITH ";
      for (std::size_t i = 0; i < q.ctes.size(); ++i) {
        const auto& cte = q.ctes[i];
        if (i > 0) out += ", ";
        out += ident(cte.name);
        if (!cte.columns.empty()) {
          out += "(";
          for (std::size_t c = 0; c < cte.columns.size(); ++c) {
            if (c > 0) out += ", ";
            out += ident(cte.columns[c]);
          }
          out += ")";
        }
        out += " AS (" + query(*cte.query) + ")";
      }
      out += " ";
    }
    out += core(q.first);
    for (const auto& term : q.compounds) out += " " + term.op + " " + core(term.core);
    if (!q.order_by.empty()) {
      out += " ORDER BY ";
      for (std::size_t i = 0; i < q.order_by.size(); ++i) {
        const auto& term = q.order_by[i];
        if (i > 0) out += ", ";
        out += expr(term.expr);
        if (!term.direction.empty()) out += " " + term.direction;
        if (!term.nulls.empty()) out += " " + term.nulls;
      }
    }
    if (q.limit) out += " LIMIT " + expr(*q.limit);
    if (q.offset) out += " OFFSET " + expr(*q.offset);
    return out;
  }

 private:
  // Parenthesises a child that would otherwise re-associate.
  std::string child(const Expr& e, int parent, bool right) {
    const int p = precedence(e);
    const bool wrap = right ? p <= parent : p < parent;
    std::string text = expr(e);
    return wrap ? "(" + text + ")" : text;
  }

  std::string source(const TableSource& s) {
    std::string out;
    switch (s.kind) {
      case SourceKind::table:
        out = s.schema.empty() ? ident(s.name) : ident(s.schema) + "." + ident(s.name);
        break;
      case SourceKind::subquery:
        out = "(" + query(*s.query) + ")";
        break;
      case SourceKind::opaque:
        out = s.name;
        break;
    }
    if (!s.alias.empty()) out += " AS " + ident(s.alias);
    return out;
  }

  std::string core(const SelectCore& c) {
    std::string out = c.distinct ? "SELECT DISTINCT " : "SELECT ";
    for (std::size_t i = 0; i < c.projection.size(); ++i) {
      if (i > 0) out += ", ";
      out += expr(c.projection[i].expr);
      if (!c.projection[i].alias.empty()) out += " AS " + ident(c.projection[i].alias);
    }
    if (!c.from.empty()) {
      out += " FROM ";
      for (std::size_t i = 0; i < c.from.size(); ++i) {
        const auto& join = c.from[i];
        if (i > 0) out += join.op == "," ? ", " : " " + join.op + " ";
        out += source(join.source);
        if (join.on) out += " ON " + expr(*join.on);
        if (!join.using_columns.empty()) {
          out += " USING (";
          for (std::size_t u = 0; u < join.using_columns.size(); ++u) {
            if (u > 0) out += ", ";
            out += ident(join.using_columns[u]);
          }
          out += ")";
        }
      }
    }
    if (c.where) out += " WHERE " + expr(*c.where);
    if (!c.group_by.empty()) {
      out += " GROUP BY ";
      for (std::size_t i = 0; i < c.group_by.size(); ++i) {
        if (i > 0) out += ", ";
        out += expr(c.group_by[i]);
      }
    }
    if (c.having) out += " HAVING " + expr(*c.having);
    return out;
  }
};

}  // namespace

std::string render(const Query& query) { return Renderer().query(query); }
std::string render(const Expr& expr) { return Renderer().expr(expr); }

}  // namespace nl2sql::sql
