#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lawbound/report.hpp"

namespace lawbound::verify {

struct SuiteOptions {
  bool quick = false;
  std::uint64_t seed = 1;
};

inline constexpr int kCriteria = 14;

std::string criterion_name(int id);
// One acceptance criterion; checks carry the pass/fail verdicts.
Report run_criterion(int id, const SuiteOptions& opt);

struct CriterionResult {
  int id = 0;
  std::string name;
  Report report;
  double seconds = 0.0;  // never serialized into the combined report
  bool passed() const { return report.all_satisfied(); }
};

struct SuiteResult {
  std::vector<CriterionResult> criteria;
  Report combined;  // checks/metrics prefixed with "cNN."
  bool all_passed() const { return combined.all_satisfied(); }
};

using Progress = std::function<void(const CriterionResult&)>;
SuiteResult run_suite(const SuiteOptions& opt, const std::vector<int>& ids, const Progress& progress = {});
SuiteResult run_acceptance(const SuiteOptions& opt, const Progress& progress = {});

}  // namespace lawbound::verify
