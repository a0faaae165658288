#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace lawbound {

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  bool satisfied = true;

  bool operator==(const Check&) const = default;
};

// value <= bound * (1 + rel_tol) + abs_tol
Check check_leq(std::string name, double value, double bound, double rel_tol, double abs_tol = 0.0);

struct Report {
  std::string command;
  std::string config_hash;
  std::vector<Check> checks;
  std::map<std::string, double> metrics;
  double wall_time = std::nan("");  // serialized only when finite

  Check& add(Check c) {
    checks.push_back(std::move(c));
    return checks.back();
  }
  bool all_satisfied() const;
  void merge(const Report& other, const std::string& prefix);

  std::string to_json(int indent = 2) const;
  static Report from_json(const std::string& text);
  bool operator==(const Report& o) const;
};

void write_report(const std::string& path, const Report& r);
Report read_report(const std::string& path);

// FNV-1a over the canonical (sorted-key, compact) JSON serialization.
std::string config_hash(const std::string& json_text);

}  // namespace lawbound
