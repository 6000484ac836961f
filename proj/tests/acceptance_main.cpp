// Acceptance suite: runs every verification suite and prints one line per
// criterion. Exit code 0 only when everything passes.

#include <cstdio>

#include "qfilter/linalg.hpp"
#include "qfilter/verify.hpp"

int main() {
    bool all_pass = true;
    int index = 0;
    for (const auto& suite : qfilter::known_suites()) {
        qfilter::SuiteReport report;
        try {
            report = qfilter::verify_suite(suite);
        } catch (const std::exception& e) {
            std::printf("[FAIL] suite %s aborted: %s\n", suite.c_str(), e.what());
            all_pass = false;
            continue;
        }
        for (const auto& c : report.criteria) {
            ++index;
            std::printf("[%s] %2d %-34s measured %.6g %s tolerance %.6g (%.1fs) %s\n",
                        c.pass ? "PASS" : "FAIL", index, c.name.c_str(), c.measured,
                        c.comparator.c_str(), c.tolerance, c.seconds,
                        c.detail.c_str());
            all_pass = all_pass && c.pass;
        }
    }
    std::printf("%s\n", all_pass ? "ACCEPTANCE: ALL CRITERIA PASS" : "ACCEPTANCE: FAILURES PRESENT");
    return all_pass ? 0 : 1;
}
