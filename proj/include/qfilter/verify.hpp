// Machine-checkable verification suites; each criterion carries its measured
// value, pinned tolerance and pass flag.

#pragma once

#include <string>
#include <vector>

namespace qfilter {

struct CriterionResult {
    std::string name;
    double measured = 0;
    double tolerance = 0;
    std::string comparator;  // "<", "<=", ">=", "in" (interval around target)
    bool pass = false;
    double seconds = 0;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::vector<CriterionResult> criteria;
    bool pass = true;

    std::string to_json() const;
};

const std::vector<std::string>& known_suites();

// throws ConfigError for an unknown suite name; "all" runs everything
SuiteReport verify_suite(const std::string& name);

}  // namespace qfilter
