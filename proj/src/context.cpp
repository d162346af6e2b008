#include "nl2sql/context.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nl2sql/digest.hpp"
#include "nl2sql/error.hpp"
#include "nl2sql/sqlite_db.hpp"

namespace nl2sql {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string trim(std::string_view text) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(begin, end - begin + 1));
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, embedded newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field.push_back(c);
    }
  }
  if (any || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

bool is_simple_identifier(std::string_view name) {
  if (name.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) {
    return false;
  }
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

std::string sql_string_literal(std::string_view value) {
  std::string out = "'";
  for (char c : value) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::size_t longest_common_substring(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

std::vector<std::string> question_words(std::string_view question) {
  std::vector<std::string> words;
  std::string word;
  for (unsigned char c : question) {
    if (std::isalnum(c) || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (!word.empty()) {
      words.push_back(std::move(word));
      word.clear();
    }
  }
  if (!word.empty()) words.push_back(std::move(word));
  return words;
}

}  // namespace

bool ColumnInfo::textual() const {
  // SQLite type affinity rule for TEXT.
  const std::string type = lower(declared_type);
  if (type.find("int") != std::string::npos) return false;
  return type.find("char") != std::string::npos ||
         type.find("clob") != std::string::npos ||
         type.find("text") != std::string::npos;
}

const ColumnInfo* TableInfo::find_column(std::string_view column) const {
  for (const auto& info : columns) {
    if (iequals(info.name, column)) return &info;
  }
  return nullptr;
}

const TableInfo* SchemaContext::find_table(std::string_view table) const {
  for (const auto& info : tables) {
    if (iequals(info.name, table)) return &info;
  }
  return nullptr;
}

ColumnDescriptions load_descriptions(const std::filesystem::path& dir) {
  ColumnDescriptions out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return out;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::string text = read_file(file);
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    const auto rows = parse_csv(text);
    if (rows.empty()) continue;
    int name_col = -1;
    int desc_col = -1;
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
      const std::string header = lower(trim(rows[0][i]));
      if (header == "original_column_name") name_col = static_cast<int>(i);
      if (header == "column_description") desc_col = static_cast<int>(i);
    }
    if (name_col < 0 || desc_col < 0) continue;
    const std::string table = lower(file.stem().string());
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      const auto need = static_cast<std::size_t>(std::max(name_col, desc_col));
      if (row.size() <= need) continue;
      const std::string column = trim(row[name_col]);
      const std::string description = trim(row[desc_col]);
      if (column.empty() || description.empty()) continue;
      out[ColumnKey{table, lower(column)}] = description;
    }
  }
  return out;
}

SchemaContext extract_schema(const DatabaseHandle& db,
                             const ColumnDescriptions* descriptions) {
  SchemaContext ctx;
  ctx.db_id = db.db_id;
  try {
    auto conn = sqlite::Connection::open_readonly(db.path, db.db_id);
    std::vector<std::string> names;
    {
      sqlite::Statement tables(conn,
                               "SELECT name FROM sqlite_master WHERE "
                               "type = 'table' AND name NOT LIKE 'sqlite_%' "
                               "ORDER BY rowid");
      while (tables.step()) names.push_back(tables.column_text(0));
    }
    for (const auto& name : names) {
      TableInfo table;
      table.name = name;
      std::vector<std::pair<std::int64_t, std::string>> pk;
      {
        sqlite::Statement info(
            conn, "PRAGMA table_info(" + sqlite::quote_identifier(name) + ")");
        while (info.step()) {
          ColumnInfo column;
          column.name = info.column_text(1);
          column.declared_type = info.column_text(2);
          if (descriptions != nullptr) {
            auto it = descriptions->find(
                ColumnKey{lower(name), lower(column.name)});
            if (it != descriptions->end()) column.description = it->second;
          }
          if (const auto position = info.column_int(5); position > 0) {
            pk.emplace_back(position, column.name);
          }
          table.columns.push_back(std::move(column));
        }
      }
      std::sort(pk.begin(), pk.end());
      for (auto& entry : pk) table.primary_key.push_back(entry.second);
      {
        sqlite::Statement fks(conn, "PRAGMA foreign_key_list(" +
                                        sqlite::quote_identifier(name) + ")");
        while (fks.step()) {
          table.foreign_keys.push_back(ForeignKey{
              fks.column_text(3), fks.column_text(2), fks.column_text(4)});
        }
      }
      for (auto& column : table.columns) {
        const std::string col = sqlite::quote_identifier(column.name);
        try {
          sqlite::Statement sample(
              conn, "SELECT DISTINCT quote(" + col + ") FROM " +
                        sqlite::quote_identifier(name) + " WHERE " + col +
                        " IS NOT NULL AND typeof(" + col +
                        ") != 'blob' AND length(" + col + ") <= 80 LIMIT " +
                        std::to_string(kSampledValuesPerColumn));
          while (sample.step()) {
            column.sample_values.push_back(sample.column_text(0));
          }
        } catch (const Error& e) {
          std::cerr << "warning: " << db.db_id << "." << name << "."
                    << column.name << ": value sampling failed: " << e.what()
                    << "\n";
        }
      }
      ctx.tables.push_back(std::move(table));
    }
    // Implicit foreign-key targets reference the parent's primary key.
    for (auto& table : ctx.tables) {
      for (auto& fk : table.foreign_keys) {
        if (!fk.foreign_column.empty()) continue;
        if (const auto* parent = ctx.find_table(fk.foreign_table);
            parent != nullptr && parent->primary_key.size() == 1) {
          fk.foreign_column = parent->primary_key.front();
        }
      }
    }
  } catch (const OpenError& e) {
    throw SchemaError(e.what());
  } catch (const Error& e) {
    throw SchemaError("schema extraction failed for '" + db.db_id +
                      "': " + e.what());
  }
  return ctx;
}

std::string render_identifier(std::string_view name) {
  if (is_simple_identifier(name)) return std::string(name);
  std::string out = "`";
  for (char c : name) {
    if (c == '`') out.push_back('`');
    out.push_back(c);
  }
  out.push_back('`');
  return out;
}

std::string render_ddl(const SchemaContext& schema,
                       const RenderOptions& options) {
  std::ostringstream out;
  bool first_table = true;
  for (const auto& table : schema.tables) {
    if (!first_table) out << "\n";
    first_table = false;
    std::vector<std::pair<std::string, std::string>> lines;  // body, comment
    for (const auto& column : table.columns) {
      std::string body = render_identifier(column.name);
      if (!column.declared_type.empty()) body += " " + column.declared_type;

      std::vector<std::string> values;
      auto matched = schema.matched_values.find(ColumnKey{table.name, column.name});
      if (matched != schema.matched_values.end()) {
        for (const auto& value : matched->second) {
          values.push_back(sql_string_literal(value));
        }
      }
      if (options.include_values) {
        std::size_t added = 0;
        for (const auto& value : column.sample_values) {
          if (added >= options.values_per_column) break;
          if (std::find(values.begin(), values.end(), value) != values.end()) {
            continue;
          }
          values.push_back(value);
          ++added;
        }
      }
      std::string comment;
      if (options.include_descriptions && column.description) {
        comment = *column.description;
      }
      if (!values.empty()) {
        if (!comment.empty()) comment += "; ";
        comment += "values: ";
        for (std::size_t i = 0; i < values.size(); ++i) {
          if (i > 0) comment += ", ";
          comment += values[i];
        }
      }
      lines.emplace_back(std::move(body), std::move(comment));
    }
    if (!table.primary_key.empty()) {
      std::string body = "PRIMARY KEY (";
      for (std::size_t i = 0; i < table.primary_key.size(); ++i) {
        if (i > 0) body += ", ";
        body += render_identifier(table.primary_key[i]);
      }
      lines.emplace_back(body + ")", "");
    }
    for (const auto& fk : table.foreign_keys) {
      std::string body = "FOREIGN KEY (" + render_identifier(fk.column) +
                         ") REFERENCES " + render_identifier(fk.foreign_table);
      if (!fk.foreign_column.empty()) {
        body += "(" + render_identifier(fk.foreign_column) + ")";
      }
      lines.emplace_back(std::move(body), "");
    }
    out << "CREATE TABLE " << render_identifier(table.name) << " (\n";
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out << "  " << lines[i].first;
      if (i + 1 < lines.size()) out << ",";
      if (!lines[i].second.empty()) {
        std::string comment = lines[i].second;
        std::replace(comment.begin(), comment.end(), '\n', ' ');
        out << " -- " << comment;
      }
      out << "\n";
    }
    out << ");\n";
  }
  return out.str();
}

std::vector<std::string> question_ngrams(std::string_view question) {
  const auto words = question_words(question);
  std::vector<std::string> grams;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      std::string gram = words[i];
      for (std::size_t j = 1; j < n; ++j) gram += " " + words[i + j];
      grams.push_back(std::move(gram));
    }
  }
  return grams;
}

double value_match_score(std::string_view literal,
                         const std::vector<std::string>& ngrams) {
  if (literal.empty()) return 0.0;
  const std::string needle = lower(literal);
  std::size_t best = 0;
  for (const auto& gram : ngrams) {
    best = std::max(best, longest_common_substring(needle, gram));
    if (best == needle.size()) break;
  }
  return static_cast<double>(best) / static_cast<double>(needle.size());
}

SchemaContext retrieve_values(std::string_view question,
                              const DatabaseHandle& db, SchemaContext schema,
                              std::size_t top_k) {
  if (top_k == 0) throw ConfigError("retrieve_values: top_k must be >= 1");
  const auto ngrams = question_ngrams(question);
  if (ngrams.empty()) return schema;
  // Every n-gram is a substring of the joined word sequence, so its LCS with
  // a literal bounds the n-gram score from above.
  std::string joined;
  for (const auto& word : question_words(question)) {
    if (!joined.empty()) joined.push_back(' ');
    joined += word;
  }

  auto conn = sqlite::Connection::open_readonly(db.path, db.db_id);
  for (const auto& table : schema.tables) {
    for (const auto& column : table.columns) {
      if (!column.textual()) continue;
      const std::string col = sqlite::quote_identifier(column.name);
      std::vector<std::pair<double, std::string>> scored;
      try {
        sqlite::Statement values(
            conn, "SELECT DISTINCT " + col + " FROM " +
                      sqlite::quote_identifier(table.name) + " WHERE typeof(" +
                      col + ") = 'text' LIMIT " +
                      std::to_string(kCandidateLiteralLimit));
        while (values.step()) {
          std::string literal = values.column_text(0);
          if (literal.empty()) continue;
          const double bound =
              static_cast<double>(longest_common_substring(lower(literal), joined)) /
              static_cast<double>(literal.size());
          if (bound < kValueMatchThreshold) continue;
          const double score = value_match_score(literal, ngrams);
          if (score >= kValueMatchThreshold) {
            scored.emplace_back(score, std::move(literal));
          }
        }
      } catch (const Error& e) {
        std::cerr << "warning: " << db.db_id << "." << table.name << "."
                  << column.name << ": skipped during value retrieval: "
                  << e.what() << "\n";
        continue;
      }
      if (scored.empty()) continue;
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        if (a.second.size() != b.second.size()) {
          return a.second.size() < b.second.size();
        }
        return a.second < b.second;
      });
      if (scored.size() > top_k) scored.resize(top_k);
      auto& slot = schema.matched_values[ColumnKey{table.name, column.name}];
      slot.clear();
      for (auto& entry : scored) slot.push_back(std::move(entry.second));
    }
  }
  return schema;
}

std::string question_text(const BenchmarkItem& item) {
  if (!item.evidence || item.evidence->empty()) return item.question;
  return item.question + "\nEvidence: " + *item.evidence;
}

std::string build_prompt(const BenchmarkItem& item, const SchemaContext& ctx) {
  std::string prompt;
  prompt +=
      "You are a data science expert. Below, you are provided with a database "
      "schema and a natural language question. Your task is to understand the "
      "schema and generate a valid SQL query to answer the question.\n"
      "\n"
      "Database Engine:\n"
      "SQLite\n"
      "\n"
      "Database Schema:\n";
  prompt += ctx.ddl_text;
  if (!ctx.ddl_text.empty() && ctx.ddl_text.back() != '\n') prompt += "\n";
  prompt +=
      "This schema describes the database's structure, including tables, "
      "columns, primary keys, foreign keys, and any relevant relationships or "
      "constraints.\n"
      "\n"
      "Question:\n";
  prompt += question_text(item);
  prompt +=
      "\n"
      "\n"
      "Instructions:\n"
      "- Make sure you only output the information that is asked in the "
      "question. If the question asks for a specific column, make sure to "
      "only include that column in the SELECT clause, nothing more.\n"
      "- The generated query should return all of the information asked in "
      "the question without any missing or extra information.\n"
      "- Before generating the final SQL query, please think through the "
      "steps of how to write the query.\n"
      "- Note that while the reasoning process and SQL query need to be "
      "enclosed within <answer> </answer> tag, this should not affect the "
      "quality of the SQL generation.\n"
      "- The answer must contain the SQL query within ```sql ``` tags.\n"
      "\n"
      "\n"
      "Output Format:\n"
      "<answer>\n"
      "-- Your reasoning process here\n"
      "```sql\n"
      "-- Your SQL query\n"
      "```\n"
      "</answer>\n"
      "\n"
      "Take a deep breath and think step by step to find the correct SQL "
      "query.\n";
  return prompt;
}

}  // namespace nl2sql
