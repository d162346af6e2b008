#pragma once

// Independent reference implementations and hand-labelled case tables shared
// by the unit tests and the acceptance binary.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "nl2sql/gateway.hpp"

namespace nl2sql::testing {

struct ComparePair {
  std::string name;
  std::string db_id;
  std::string pred;
  std::string gold;
  bool order_sensitive = false;  // labelled by hand from the gold text
  bool expected = false;
};

// Twenty (pred, gold) pairs over the fixture databases.
const std::vector<ComparePair>& compare_pairs();

// Row-by-row comparison written directly against the sqlite3 API with
// quadratic multiset matching.
bool brute_force_equal(const std::filesystem::path& db, const std::string& pred,
                       const std::string& gold, bool order_sensitive);

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  bool operator==(const Rational&) const = default;
};

Rational reduce(Rational r);
// Counts k-subsets of an n-pool (first c marked correct) holding a correct one.
Rational enumerate_pass_at_k(unsigned n, unsigned c, unsigned k);
// 1 - prod (n-c-i)/(n-i), in exact arithmetic.
Rational product_pass_at_k(unsigned n, unsigned c, unsigned k);
double monte_carlo_pass_at_k(unsigned n, unsigned c, unsigned k,
                             std::size_t samples, std::mt19937_64& rng);

struct SelectorCase {
  std::string name;
  std::string gold;
  std::vector<Candidate> candidates;
  std::optional<std::size_t> expected_trajectory;
};

// Twelve scripted pools over codebase_community with hand-computed winners.
std::vector<SelectorCase> selector_cases();

nlohmann::json load_json(const std::string& fixture_name);

}  // namespace nl2sql::testing
