#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vbcast {

/// One named measurement compared against a tolerance. Exact checks carry a
/// zero tolerance and record the observed deviation, which must vanish.
/// Checks that accept a two sided band keep `passed` authoritative and
/// describe the band in `detail`.
struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// A labelled group of checks, timed as a unit. A positive budget turns the
/// runtime into part of the acceptance: the group only passes when every
/// check passes and the wall clock stays within the budget. Groups made of
/// exact arithmetic leave the budget at zero, which disables the gate.
struct CriterionResult {
  int number = 0;
  std::string label;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// Result of one verification suite run.
struct SuiteResult {
  std::string name;
  std::vector<CriterionResult> criteria;

  bool passed() const;
};

/// Suite names accepted by run_suite, in reporting order. The "all" alias is
/// additionally accepted by run_suite but not listed here.
const std::vector<std::string>& verification_suite_names();

/// Runs one named suite: "closed-forms", "spectra", "twirl", "sdp",
/// "sampling", or "all" for the whole battery. Unknown names raise
/// argument_error. The seed drives every randomised check, so a fixed seed
/// gives a reproducible report.
SuiteResult run_suite(const std::string& name, std::uint64_t seed = 0);

/// All verification criteria in order, as run by the acceptance binary.
std::vector<CriterionResult> acceptance_criteria(std::uint64_t seed = 0);

std::string to_json_string(const CheckResult& check, int indent = -1);
std::string to_json_string(const CriterionResult& criterion, int indent = -1);
std::string to_json_string(const SuiteResult& suite, int indent = -1);

}  // namespace vbcast
