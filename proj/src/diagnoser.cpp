#include "nl2sql/diagnoser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nl2sql/error.hpp"

namespace nl2sql {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string upper(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return out;
}

std::string normalize_number(const std::string& text, bool negative) {
  std::string out;
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    if (std::nearbyint(value) == value && std::fabs(value) < 1e15) {
      out = std::to_string(static_cast<long long>(value));
    } else {
      char buffer[64];
      std::snprintf(buffer, sizeof buffer, "%.12g", value);
      out = buffer;
    }
  } catch (const std::exception&) {
    out = lower(text);  // hex literals and other exotic forms
  }
  return negative && out != "0" ? "-" + out : out;
}

struct Binding {
  std::string table;  // lowercased schema table, empty when derived
  bool derived = false;
};

struct Scope {
  const Scope* parent = nullptr;
  std::map<std::string, Binding> aliases;
  std::vector<Binding> sources;
  std::set<std::string> projection_aliases;
  std::set<std::string> ctes;

  bool is_cte(const std::string& name) const {
    for (const Scope* s = this; s != nullptr; s = s->parent) {
      if (s->ctes.count(name)) return true;
    }
    return false;
  }
};

struct Resolved {
  std::string key;  // "table.column" or "~name" for derived columns
  bool unknown = false;
  bool as_string = false;  // unresolved "double quoted" word
};

class Analyzer {
 public:
  explicit Analyzer(const SchemaContext& schema) : schema_(schema) {}

  QueryFacts run(const sql::Query& query) {
    facts_ = QueryFacts{};
    facts_.group_by = !query.first.group_by.empty();
    facts_.order_by = !query.order_by.empty();
    facts_.limit = query.limit.has_value();
    visit_query(query, nullptr, 0);
    return std::move(facts_);
  }

 private:
  const ColumnInfo* schema_column(const std::string& table,
                                  const std::string& column) const {
    const auto* info = schema_.find_table(table);
    return info ? info->find_column(column) : nullptr;
  }

  void visit_query(const sql::Query& query, const Scope* parent,
                   std::size_t depth) {
    facts_.max_depth = std::max(facts_.max_depth, depth);
    Scope cte_scope;
    cte_scope.parent = parent;
    for (const auto& cte : query.ctes) {
      cte_scope.ctes.insert(lower(cte.name));
      ++facts_.subquery_count;
      visit_query(*cte.query, &cte_scope, depth + 1);
    }
    facts_.compound_count += query.compounds.size();
    Scope first = visit_core(query.first, &cte_scope, depth);
    for (const auto& term : query.compounds) visit_core(term.core, &cte_scope, depth);
    for (const auto& term : query.order_by) walk(term.expr, first, depth);
    if (query.limit) walk(*query.limit, first, depth);
    if (query.offset) walk(*query.offset, first, depth);
  }

  Scope visit_core(const sql::SelectCore& core, const Scope* parent,
                   std::size_t depth) {
    Scope scope;
    scope.parent = parent;
    for (const auto& join : core.from) {
      const auto& source = join.source;
      Binding binding;
      std::string alias = lower(source.alias);
      switch (source.kind) {
        case sql::SourceKind::table: {
          const std::string name = lower(source.name);
          if (scope.is_cte(name)) {
            binding.derived = true;
          } else {
            binding.table = name;
            facts_.tables.insert(name);
          }
          if (alias.empty()) alias = name;
          break;
        }
        case sql::SourceKind::subquery:
          binding.derived = true;
          ++facts_.subquery_count;
          visit_query(*source.query, &scope, depth + 1);
          break;
        case sql::SourceKind::opaque:
          binding.derived = true;
          break;
      }
      if (!alias.empty()) scope.aliases[alias] = binding;
      scope.sources.push_back(binding);
    }
    for (const auto& item : core.projection) {
      if (!item.alias.empty()) scope.projection_aliases.insert(lower(item.alias));
    }
    for (const auto& join : core.from) {
      if (join.on) predicate(*join.on, scope, depth);
    }
    for (const auto& item : core.projection) {
      walk(item.expr, scope, depth, &facts_.projection_columns);
    }
    if (core.where) predicate(*core.where, scope, depth);
    for (const auto& expr : core.group_by) walk(expr, scope, depth);
    if (core.having) predicate(*core.having, scope, depth);
    return scope;
  }

  Resolved resolve(const sql::Expr& column, const Scope& scope) {
    const std::string name = lower(column.name);
    if (!column.qualifier.empty()) {
      const std::string qualifier = lower(column.qualifier);
      for (const Scope* s = &scope; s != nullptr; s = s->parent) {
        auto it = s->aliases.find(qualifier);
        if (it == s->aliases.end()) continue;
        if (it->second.derived) return {"~" + qualifier + "." + name};
        if (schema_column(it->second.table, name) != nullptr) {
          return {it->second.table + "." + name};
        }
        return {it->second.table + "." + name, true};
      }
      return {qualifier + "." + name, true};
    }
    for (const Scope* s = &scope; s != nullptr; s = s->parent) {
      bool has_derived = false;
      for (const auto& source : s->sources) {
        if (source.derived) {
          has_derived = true;
          continue;
        }
        if (schema_column(source.table, name) != nullptr) {
          return {source.table + "." + name};
        }
      }
      if (has_derived || s->projection_aliases.count(name)) return {"~" + name};
    }
    if (column.double_quoted) return {column.name, false, true};
    return {name, true};
  }

  void note_column(const sql::Expr& column, const Scope& scope,
                   std::set<std::string>* columns,
                   std::multiset<std::string>* literals,
                   std::set<std::string>* projection) {
    const Resolved resolved = resolve(column, scope);
    if (resolved.as_string) {
      if (literals) literals->insert(resolved.key);
      return;
    }
    if (resolved.unknown) {
      const std::string where = column.qualifier.empty()
                                    ? column.name
                                    : column.qualifier + "." + column.name;
      facts_.unknown_columns.push_back(where);
    }
    if (columns) columns->insert(resolved.key);
    if (projection) projection->insert(resolved.key);
  }

  // Collects columns, literals and functions of an expression; subqueries are
  // analysed as nested queries and contribute nothing to the atom itself.
  void walk(const sql::Expr& expr, const Scope& scope, std::size_t depth,
            std::set<std::string>* projection = nullptr,
            std::set<std::string>* columns = nullptr,
            std::multiset<std::string>* literals = nullptr,
            bool* has_subquery = nullptr) {
    using sql::ExprKind;
    switch (expr.kind) {
      case ExprKind::column:
        note_column(expr, scope, columns, literals, projection);
        return;
      case ExprKind::literal:
        if (literals) literals->insert(literal_text(expr, false));
        return;
      case ExprKind::unary:
        if (expr.op == "-" && !expr.args.empty() &&
            expr.args[0].kind == ExprKind::literal &&
            expr.args[0].literal_kind == sql::LiteralKind::number) {
          if (literals) literals->insert(literal_text(expr.args[0], true));
          return;
        }
        break;
      case ExprKind::function:
        if (!expr.op.empty()) facts_.functions.insert(upper(expr.op));
        break;
      case ExprKind::cast:
        facts_.functions.insert("CAST");
        break;
      case ExprKind::subquery:
      case ExprKind::exists:
      case ExprKind::in_query:
        ++facts_.subquery_count;
        if (has_subquery) *has_subquery = true;
        visit_query(*expr.query, &scope, depth + 1);
        break;
      default:
        break;
    }
    for (const auto& arg : expr.args) {
      walk(arg, scope, depth, projection, columns, literals, has_subquery);
    }
  }

  static std::string literal_text(const sql::Expr& literal, bool negative) {
    switch (literal.literal_kind) {
      case sql::LiteralKind::number:
        return normalize_number(literal.op, negative);
      case sql::LiteralKind::string:
        return literal.op;
      default:
        return upper(literal.op);
    }
  }

  static std::string op_label(const sql::Expr& expr) {
    using sql::ExprKind;
    switch (expr.kind) {
      case ExprKind::binary:
        if (expr.op == "==") return "=";
        if (expr.op == "!=") return "<>";
        return expr.op;
      case ExprKind::between:
        return expr.negated ? "NOT BETWEEN" : "BETWEEN";
      case ExprKind::in_list:
      case ExprKind::in_query:
        return expr.negated ? "NOT IN" : "IN";
      case ExprKind::like:
        return expr.negated ? "NOT " + expr.op : expr.op;
      case ExprKind::is_null:
        return expr.negated ? "IS NOT NULL" : "IS NULL";
      case ExprKind::unary:
        return expr.op == "NOT" ? "NOT" : "EXPR";
      case ExprKind::exists:
        return "EXISTS";
      default:
        return "EXPR";
    }
  }

  void predicate(const sql::Expr& expr, const Scope& scope, std::size_t depth) {
    using sql::ExprKind;
    if (expr.kind == ExprKind::binary && (expr.op == "AND" || expr.op == "OR")) {
      ++(expr.op == "AND" ? facts_.and_count : facts_.or_count);
      predicate(expr.args[0], scope, depth);
      predicate(expr.args[1], scope, depth);
      return;
    }
    if (expr.kind == ExprKind::binary && (expr.op == "=" || expr.op == "==") &&
        expr.args[0].kind == ExprKind::column &&
        expr.args[1].kind == ExprKind::column) {
      const Resolved left = resolve(expr.args[0], scope);
      const Resolved right = resolve(expr.args[1], scope);
      const auto table_of = [](const Resolved& r) {
        if (r.key.empty() || r.key[0] == '~') return std::string();
        const auto dot = r.key.find('.');
        return dot == std::string::npos ? std::string() : r.key.substr(0, dot);
      };
      const std::string a = table_of(left);
      const std::string b = table_of(right);
      if (!a.empty() && !b.empty() && a != b) {
        facts_.join_edges.insert(std::minmax(a, b));
        note_column(expr.args[0], scope, nullptr, nullptr, nullptr);
        note_column(expr.args[1], scope, nullptr, nullptr, nullptr);
        return;
      }
    }
    PredicateAtom atom;
    atom.op = op_label(expr);
    atom.text = sql::render(expr);
    walk(expr, scope, depth, nullptr, &atom.columns, &atom.literals,
         &atom.has_subquery);
    facts_.atoms.push_back(std::move(atom));
  }

  const SchemaContext& schema_;
  QueryFacts facts_;
};

template <class Set>
bool intersects(const Set& a, const Set& b) {
  for (const auto& x : a) {
    if (b.count(x)) return true;
  }
  return false;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
  }
  return out;
}

template <class Set>
std::vector<std::string> difference(const Set& a, const Set& b) {
  std::vector<std::string> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

bool counterpart(const PredicateAtom& a, const PredicateAtom& b) {
  return intersects(a.columns, b.columns) || intersects(a.literals, b.literals);
}

std::string fold_literal(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    if (!std::isspace(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::optional<ErrorLabel> table_rule(const QueryFacts& pred,
                                     const QueryFacts& gold) {
  if (auto extra = difference(pred.tables, gold.tables); !extra.empty()) {
    return make_label(ErrorSubtype::table_mismatch,
                      "Selection of incorrect tables: prediction uses " +
                          join_names(extra) + " which the reference does not");
  }
  for (const auto& edge : pred.join_edges) {
    if (!gold.join_edges.count(edge)) {
      return make_label(ErrorSubtype::table_mismatch,
                        "Selection of incorrect tables: prediction joins " +
                            edge.first + " with " + edge.second +
                            ", a pairing the reference never joins");
    }
  }
  if (auto missing = difference(gold.tables, pred.tables); !missing.empty()) {
    return make_label(ErrorSubtype::table_missing,
                      "Omission of essential tables: " + join_names(missing));
  }
  return std::nullopt;
}

std::optional<ErrorLabel> condition_rule(const QueryFacts& pred,
                                         const QueryFacts& gold) {
  if (!pred.unknown_columns.empty()) {
    return make_label(ErrorSubtype::attribute_error,
                      "Selection of incorrect columns: " +
                          join_names(pred.unknown_columns) +
                          " not found in the referenced tables");
  }
  for (const auto& atom : gold.atoms) {
    const bool matched = std::any_of(
        pred.atoms.begin(), pred.atoms.end(),
        [&](const PredicateAtom& p) { return counterpart(atom, p); });
    if (!matched) {
      return make_label(ErrorSubtype::attribute_error,
                        "Explicit condition missing: reference filters on " +
                            atom.text);
    }
  }
  for (const auto& atom : pred.atoms) {
    const bool matched = std::any_of(
        gold.atoms.begin(), gold.atoms.end(),
        [&](const PredicateAtom& g) { return counterpart(atom, g); });
    if (!matched) {
      return make_label(ErrorSubtype::attribute_error,
                        "Selection of incorrect columns within the condition " +
                            atom.text);
    }
  }
  // Same operator and literals on a different single column.
  for (const auto& atom : pred.atoms) {
    for (const auto& reference : gold.atoms) {
      if (atom.columns.size() == 1 && reference.columns.size() == 1 &&
          atom.columns != reference.columns && atom.op == reference.op &&
          !atom.literals.empty() && atom.literals == reference.literals) {
        return make_label(ErrorSubtype::attribute_error,
                          "Selection of incorrect columns within the condition " +
                              atom.text + " vs " + reference.text);
      }
    }
  }
  for (const auto& atom : pred.atoms) {
    for (const auto& reference : gold.atoms) {
      if (atom.columns == reference.columns &&
          atom.literals == reference.literals && atom.op != reference.op) {
        return make_label(ErrorSubtype::operator_error,
                          "Use of incorrect comparison operator: " + atom.text +
                              " vs " + reference.text);
      }
    }
  }
  if (pred.or_count != gold.or_count) {
    return make_label(ErrorSubtype::operator_error,
                      "Use of incorrect logical operators: " +
                          std::to_string(pred.or_count) + " OR vs " +
                          std::to_string(gold.or_count) + " in the reference");
  }
  return std::nullopt;
}

std::optional<ErrorLabel> value_rule(const QueryFacts& pred,
                                     const QueryFacts& gold) {
  for (const auto& atom : pred.atoms) {
    for (const auto& reference : gold.atoms) {
      if (atom.columns.empty() || atom.columns != reference.columns) continue;
      // A literal against a subquery is a nesting problem, not a value one.
      if (atom.has_subquery != reference.has_subquery) {
        return make_label(ErrorSubtype::structural_error,
                          "Incorrect formulation of complex nested queries: " +
                              atom.text + " vs " + reference.text);
      }
      if (atom.literals != reference.literals) {
        return make_label(ErrorSubtype::value_mismatch,
                          "Incorrect extraction, formatting, or alignment of "
                          "literals: " +
                              atom.text + " vs " + reference.text);
      }
    }
  }
  std::multiset<std::string> pred_literals;
  std::multiset<std::string> gold_literals;
  for (const auto& atom : pred.atoms) pred_literals.insert(atom.literals.begin(), atom.literals.end());
  for (const auto& atom : gold.atoms) gold_literals.insert(atom.literals.begin(), atom.literals.end());
  if (pred_literals != gold_literals) {
    std::string detail;
    for (const auto& literal : gold_literals) {
      if (pred_literals.count(literal)) continue;
      for (const auto& candidate : pred_literals) {
        if (fold_literal(candidate) == fold_literal(literal)) {
          detail = " ('" + candidate + "' written for '" + literal + "')";
          break;
        }
      }
      if (!detail.empty()) break;
    }
    return make_label(ErrorSubtype::value_mismatch,
                      "Incorrect extraction, formatting, or alignment of "
                      "literals" + detail);
  }
  return std::nullopt;
}

std::optional<ErrorLabel> function_rule(const QueryFacts& pred,
                                        const QueryFacts& gold) {
  if (pred.functions == gold.functions) return std::nullopt;
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  std::set_difference(gold.functions.begin(), gold.functions.end(),
                      pred.functions.begin(), pred.functions.end(),
                      std::back_inserter(missing));
  std::set_difference(pred.functions.begin(), pred.functions.end(),
                      gold.functions.begin(), gold.functions.end(),
                      std::back_inserter(extra));
  std::string rationale = "Incorrect application, omission, or selection of functions";
  if (!extra.empty()) rationale += "; unexpected " + join_names(extra);
  if (!missing.empty()) rationale += "; missing " + join_names(missing);
  return make_label(ErrorSubtype::aggregation_error, rationale);
}

std::optional<ErrorLabel> others_rule(const QueryFacts& pred,
                                      const QueryFacts& gold) {
  std::vector<std::string> clauses;
  if (gold.group_by && !pred.group_by) clauses.push_back("GROUP BY");
  if (gold.order_by && !pred.order_by) clauses.push_back("ORDER BY");
  if (gold.limit && !pred.limit) clauses.push_back("LIMIT");
  if (!clauses.empty()) {
    return make_label(ErrorSubtype::clause_missing,
                      "Absence of critical structural components: " +
                          join_names(clauses));
  }
  if (pred.subquery_count != gold.subquery_count ||
      pred.max_depth != gold.max_depth ||
      pred.compound_count != gold.compound_count) {
    return make_label(ErrorSubtype::structural_error,
                      "Incorrect formulation of complex nested queries: " +
                          std::to_string(pred.subquery_count) +
                          " subqueries at depth " + std::to_string(pred.max_depth) +
                          " vs " + std::to_string(gold.subquery_count) +
                          " at depth " + std::to_string(gold.max_depth));
  }
  return std::nullopt;
}

}  // namespace

ErrorCategory category_of(ErrorSubtype subtype) {
  switch (subtype) {
    case ErrorSubtype::table_mismatch:
    case ErrorSubtype::table_missing:
      return ErrorCategory::table;
    case ErrorSubtype::value_mismatch:
      return ErrorCategory::value;
    case ErrorSubtype::attribute_error:
    case ErrorSubtype::operator_error:
      return ErrorCategory::condition;
    case ErrorSubtype::aggregation_error:
      return ErrorCategory::function;
    case ErrorSubtype::clause_missing:
    case ErrorSubtype::structural_error:
      break;
  }
  return ErrorCategory::others;
}

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::table:
      return "Table";
    case ErrorCategory::value:
      return "Value";
    case ErrorCategory::condition:
      return "Condition";
    case ErrorCategory::function:
      return "Function";
    case ErrorCategory::others:
      break;
  }
  return "Others";
}

std::string_view to_string(ErrorSubtype subtype) {
  switch (subtype) {
    case ErrorSubtype::table_mismatch:
      return "table_mismatch";
    case ErrorSubtype::table_missing:
      return "table_missing";
    case ErrorSubtype::value_mismatch:
      return "value_mismatch";
    case ErrorSubtype::attribute_error:
      return "attribute_error";
    case ErrorSubtype::operator_error:
      return "operator_error";
    case ErrorSubtype::aggregation_error:
      return "aggregation_error";
    case ErrorSubtype::clause_missing:
      return "clause_missing";
    case ErrorSubtype::structural_error:
      break;
  }
  return "structural_error";
}

ErrorCategory parse_category(std::string_view text) {
  for (auto category : kAllCategories) {
    if (to_string(category) == text) return category;
  }
  throw Error("unknown error category '" + std::string(text) + "'");
}

ErrorSubtype parse_subtype(std::string_view text) {
  for (int i = 0; i <= static_cast<int>(ErrorSubtype::structural_error); ++i) {
    const auto subtype = static_cast<ErrorSubtype>(i);
    if (to_string(subtype) == text) return subtype;
  }
  throw Error("unknown error subtype '" + std::string(text) + "'");
}

ErrorLabel make_label(ErrorSubtype subtype, std::string rationale) {
  return ErrorLabel{category_of(subtype), subtype, std::move(rationale)};
}

QueryFacts analyze(const sql::Query& query, const SchemaContext& schema) {
  return Analyzer(schema).run(query);
}

ErrorLabel classify_error(const std::optional<std::string>& pred_sql,
                          std::string_view gold_sql,
                          const SchemaContext& schema,
                          const ExecutionOutcome* pred_outcome,
                          const ExecutionOutcome*) {
  const bool no_prediction =
      !pred_sql || pred_sql->find_first_not_of(" \t\r\n;") == std::string::npos ||
      (pred_outcome && pred_outcome->status == ExecStatus::empty_prediction);
  if (no_prediction) {
    return make_label(ErrorSubtype::structural_error, "unparseable: no SQL in the answer");
  }
  sql::Query pred;
  try {
    pred = sql::parse(*pred_sql);
  } catch (const ParseError& e) {
    return make_label(ErrorSubtype::structural_error,
                      std::string("unparseable: ") + e.what());
  }
  sql::Query gold;
  try {
    gold = sql::parse(gold_sql);
  } catch (const ParseError& e) {
    return make_label(ErrorSubtype::structural_error,
                      std::string("unparseable reference query: ") + e.what());
  }
  const QueryFacts pred_facts = analyze(pred, schema);
  const QueryFacts gold_facts = analyze(gold, schema);

  // Priority: Table > Condition > Value > Function > Others.
  for (auto rule : {table_rule, condition_rule, value_rule, function_rule,
                    others_rule}) {
    if (auto label = rule(pred_facts, gold_facts)) return *label;
  }
  if (pred_facts.projection_columns != gold_facts.projection_columns) {
    return make_label(ErrorSubtype::structural_error,
                      "no predicate-level difference; projected columns differ");
  }
  return make_label(ErrorSubtype::structural_error,
                    "no static difference found; results differ at execution");
}

ErrorDistribution error_distribution(const std::vector<ErrorLabel>& labels) {
  ErrorDistribution counts;
  for (auto category : kAllCategories) counts[category] = 0;
  for (const auto& label : labels) ++counts[label.category];
  return counts;
}

}  // namespace nl2sql
