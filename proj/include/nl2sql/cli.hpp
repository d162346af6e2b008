#pragma once

// `sqld1` command line: eval, classify, report.

#include <iosfwd>
#include <string>
#include <vector>

namespace nl2sql {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // IO or runtime failure
inline constexpr int kExitConfig = 2;       // bad flags or incompatible inputs
inline constexpr int kExitBackend = 3;      // finished, but some backend calls failed

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace nl2sql
