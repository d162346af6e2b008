#pragma once

// Benchmark + mock fixture pairs that drive the CLI end to end.

#include <cstddef>
#include <filesystem>

namespace nl2sql::testing {

struct Suite {
  std::filesystem::path benchmark;  // BIRD format
  std::filesystem::path mock;
};

// The five golden error cases; the mock answers each with its wrong prediction.
Suite write_golden_error_suite(const std::filesystem::path& dir);

// `total` items over codebase_community of which the mock gets `correct` right.
Suite write_count_suite(const std::filesystem::path& dir, std::size_t correct,
                        std::size_t total);

// Ten items whose eight trajectories are right or wrong by a fixed pattern,
// so pass@k and Maj@k curves have some shape.
Suite write_pool_suite(const std::filesystem::path& dir);

// Committed 20-item ablation fixture (tests/fixtures/ablation).
Suite ablation_suite();

}  // namespace nl2sql::testing
