#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace demix::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Reduced-scale invariant sweep across all modules, sized to finish within
// about a minute on one core. Returns one entry per named check.
std::vector<CheckResult> run_selftest(std::uint64_t seed);

}  // namespace demix::selftest
