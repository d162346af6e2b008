#pragma once

// AST for the SQLite SELECT dialect used by NL2SQL benchmarks.
//
// Nodes carry source spans, but spans never participate in equality: two
// trees are equal when their structure and contents match.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nl2sql::sql {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) { return true; }
};

// Deep-copying, nullable owning pointer with value equality.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other)
      : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const { return ptr_ != nullptr; }
  T& operator*() const { return *ptr_; }
  T* operator->() const { return ptr_.get(); }
  T* get() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

struct Query;

enum class ExprKind {
  literal,
  column,
  star,        // * or t.*
  unary,       // op: "-", "+", "~", "NOT"
  binary,      // op: normalised uppercase operator
  function,    // op: function name as written
  case_when,   // args: [operand] (when, then)* [else]
  cast,        // op: target type
  between,     // args: value, low, high
  in_list,     // args: value, items...
  in_query,    // args: value; query
  like,        // op: LIKE/GLOB/REGEXP/MATCH; args: value, pattern [, escape]
  is_null,     // args: value
  exists,      // query
  subquery,    // query
  collate,     // op: collation name; args: value
  opaque,      // op: normalised token text of an unsupported construct
};

enum class LiteralKind { number, string, null, blob, keyword };

struct Expr {
  ExprKind kind = ExprKind::opaque;
  std::string op;
  std::string qualifier;  // column / star qualifier, possibly "schema.table"
  std::string name;       // column name
  LiteralKind literal_kind = LiteralKind::null;
  bool negated = false;
  bool distinct = false;
  bool has_operand = false;  // CASE x WHEN ...
  bool has_else = false;
  bool double_quoted = false;  // column written as "name"; may be a string
  std::vector<Expr> args;
  Box<Query> query;
  std::string window;  // normalised FILTER/OVER tail of a function call
  Span span;

  bool operator==(const Expr&) const = default;
};

enum class SourceKind { table, subquery, opaque };

struct TableSource {
  SourceKind kind = SourceKind::table;
  std::string schema;
  std::string name;  // table name, or opaque text
  std::string alias;
  Box<Query> query;
  Span span;

  bool operator==(const TableSource&) const = default;
};

struct JoinClause {
  std::string op;  // "" for the first source, "," or e.g. "LEFT JOIN"
  TableSource source;
  std::optional<Expr> on;
  std::vector<std::string> using_columns;
  Span span;

  bool operator==(const JoinClause&) const = default;
};

struct SelectItem {
  Expr expr;
  std::string alias;
  Span span;

  bool operator==(const SelectItem&) const = default;
};

struct SelectCore {
  bool distinct = false;
  std::vector<SelectItem> projection;
  std::vector<JoinClause> from;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  std::optional<Expr> having;
  Span span;

  bool operator==(const SelectCore&) const = default;
};

struct CompoundTerm {
  std::string op;  // UNION, UNION ALL, INTERSECT, EXCEPT
  SelectCore core;

  bool operator==(const CompoundTerm&) const = default;
};

struct OrderTerm {
  Expr expr;
  std::string direction;  // "", "ASC" or "DESC"
  std::string nulls;      // "", "NULLS FIRST" or "NULLS LAST"

  bool operator==(const OrderTerm&) const = default;
};

struct Cte {
  std::string name;
  std::vector<std::string> columns;
  Box<Query> query;
  Span span;

  bool operator==(const Cte&) const = default;
};

struct Query {
  bool recursive = false;
  std::vector<Cte> ctes;
  SelectCore first;
  std::vector<CompoundTerm> compounds;
  std::vector<OrderTerm> order_by;
  std::optional<Expr> limit;
  std::optional<Expr> offset;
  Span span;

  bool operator==(const Query&) const = default;
};

// Parses one SELECT statement (optional trailing semicolons). Throws
// ParseError with a byte offset on token-level syntax errors.
Query parse(std::string_view sql);

// Canonical text: uppercase keywords, minimal parentheses, single spaces.
std::string render(const Query& query);
std::string render(const Expr& expr);

// Textual fallback: ORDER BY at parenthesis depth zero outside literals.
bool has_top_level_order_by(std::string_view sql);

}  // namespace nl2sql::sql
