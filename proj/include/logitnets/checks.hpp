#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "logitnets/csv.hpp"

namespace logitnets {

// One sweep of an inequality or invariant over a fixed grid of cases.
// Rows: suite, case, value, bound, passed.
struct SuiteResult {
    std::string name;
    CsvTable table{{"suite", "case", "value", "bound", "passed"}};
    long long total = 0;
    long long failures = 0;
    double seconds = 0.0;

    bool passed() const { return total > 0 && failures == 0; }
    void record(const std::string& case_name, double value, double bound, bool ok);
};

const std::vector<std::string>& suite_names();

// grid_scale multiplies sweep resolutions (1 = the default sweep sizes).
SuiteResult run_suite(const std::string& name, std::uint64_t seed, double grid_scale = 1.0);

SuiteResult sandwich_suite(double grid_scale);
SuiteResult ratio_suite(double grid_scale);
SuiteResult variance_suite(std::uint64_t seed, double grid_scale);
SuiteResult calibration_suite(std::uint64_t seed, double grid_scale);
SuiteResult J_suite(double grid_scale);
SuiteResult KL_suite(std::uint64_t seed, double grid_scale);
SuiteResult covering_suite();
SuiteResult vg_suite(int m_max = 20);
SuiteResult bump_suite(std::uint64_t seed, double grid_scale);
SuiteResult separation_suite(double grid_scale);

}  // namespace logitnets
