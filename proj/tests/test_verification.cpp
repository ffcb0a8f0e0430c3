#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vbcast/errors.hpp"
#include "vbcast/verification.hpp"

using namespace vbcast;

TEST_CASE("suite names cover the five check families") {
  const auto& names = verification_suite_names();
  REQUIRE(names.size() == 5);
  CHECK(names[0] == "closed-forms");
  CHECK(names[1] == "spectra");
  CHECK(names[2] == "twirl");
  CHECK(names[3] == "sdp");
  CHECK(names[4] == "sampling");
  CHECK_THROWS_AS(run_suite("spectral"), argument_error);
  CHECK_THROWS_AS(run_suite(""), argument_error);
}

TEST_CASE("closed form suite passes and serialises") {
  const SuiteResult suite = run_suite("closed-forms");
  REQUIRE(suite.criteria.size() == 5);
  CHECK(suite.passed());
  for (const auto& criterion : suite.criteria) {
    CHECK(criterion.passed());
    CHECK(!criterion.label.empty());
    CHECK(!criterion.checks.empty());
  }

  const std::string text = to_json_string(suite, 2);
  CHECK(text.find("\"suite\": \"closed-forms\"") != std::string::npos);
  CHECK(text.find("\"passed\": true") != std::string::npos);
  CHECK(text.find("\"measured\"") != std::string::npos);
  CHECK(text.find("\"tolerance\"") != std::string::npos);
}

TEST_CASE("spectra suite is reproducible for a fixed seed") {
  const SuiteResult a = run_suite("spectra", 42);
  const SuiteResult b = run_suite("spectra", 42);
  REQUIRE(a.criteria.size() == 1);
  CHECK(a.passed());
  REQUIRE(a.criteria[0].checks.size() == b.criteria[0].checks.size());
  for (size_t i = 0; i < a.criteria[0].checks.size(); ++i) {
    CHECK(a.criteria[0].checks[i].measured == b.criteria[0].checks[i].measured);
  }
}

TEST_CASE("a timing budget gates the criterion verdict") {
  SuiteResult suite = run_suite("closed-forms");
  CriterionResult& first = suite.criteria[0];
  REQUIRE(first.passed());
  REQUIRE(first.budget_seconds > 0.0);
  first.seconds = first.budget_seconds + 1.0;
  CHECK(!first.passed());
  CHECK(!suite.passed());
}
