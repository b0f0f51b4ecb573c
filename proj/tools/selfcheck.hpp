#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace saz::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Quick invariant suite over rules, graphs, network, search and selfplay.
// Prints one PASS/FAIL line per check.
std::vector<CheckResult> run_selfcheck(std::ostream& out, uint64_t seed);

}  // namespace saz::cli
