#pragma once

// Reproduction checks against the tabulated reference values, evaluated for
// the tensors of a run configuration.

#include <iosfwd>
#include <string>
#include <vector>

#include "garnetspin/config.hpp"

namespace garnetspin {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool informational = false;  // reported, never fails the run
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_passed() const;
};

struct VerifyOptions {
  int fit_seeds = 20;
  bool include_clock_search = true;
};

VerifyReport run_verify(const RunConfig& cfg, const VerifyOptions& options = {});
void print_report(std::ostream& out, const VerifyReport& report);

/// Field direction along (1,1,1).
Vec3 diagonal_direction();

}  // namespace garnetspin
