#include "lawbound/report.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lawbound/common.hpp"

namespace lawbound {

using nlohmann::json;

Check check_leq(std::string name, double value, double bound, double rel_tol, double abs_tol) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.bound = bound;
  c.tolerance = rel_tol > 0 ? rel_tol : abs_tol;  // absolute slack when no relative one is given
  c.satisfied = std::isfinite(value) && value <= bound * (1.0 + rel_tol) + abs_tol;
  return c;
}

bool Report::all_satisfied() const {
  for (const auto& c : checks)
    if (!c.satisfied) return false;
  return true;
}

void Report::merge(const Report& other, const std::string& prefix) {
  for (auto c : other.checks) {
    c.name = prefix + c.name;
    checks.push_back(std::move(c));
  }
  for (const auto& [k, v] : other.metrics) metrics[prefix + k] = v;
}

namespace {
// Non-finite numbers become strings so the document stays valid JSON.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}
double from_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  std::string s = j.get<std::string>();
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  throw Error("report: bad number '" + s + "'");
}
}  // namespace

std::string Report::to_json(int indent) const {
  json j;
  j["schema_version"] = 1;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["satisfied"] = all_satisfied();
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name},
                   {"value", num(c.value)},
                   {"bound", num(c.bound)},
                   {"tolerance", num(c.tolerance)},
                   {"satisfied", c.satisfied}});
  j["checks"] = arr;
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = num(v);
  j["metrics"] = m;
  if (std::isfinite(wall_time)) j["wall_time"] = wall_time;
  return j.dump(indent);
}

Report Report::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("report: malformed JSON: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw Error("report: unsupported schema version");
  Report r;
  r.command = j.at("command").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& c : j.at("checks"))
    r.checks.push_back({c.at("name").get<std::string>(), from_num(c.at("value")), from_num(c.at("bound")),
                        from_num(c.at("tolerance")), c.at("satisfied").get<bool>()});
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = from_num(v);
  if (j.contains("wall_time")) r.wall_time = j["wall_time"].get<double>();
  return r;
}

bool Report::operator==(const Report& o) const {
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  if (command != o.command || config_hash != o.config_hash || checks.size() != o.checks.size() ||
      metrics.size() != o.metrics.size() || !same(wall_time, o.wall_time))
    return false;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto &a = checks[i], &b = o.checks[i];
    if (a.name != b.name || a.satisfied != b.satisfied || !same(a.value, b.value) || !same(a.bound, b.bound) ||
        !same(a.tolerance, b.tolerance))
      return false;
  }
  for (auto it = metrics.begin(), jt = o.metrics.begin(); it != metrics.end(); ++it, ++jt)
    if (it->first != jt->first || !same(it->second, jt->second)) return false;
  return true;
}

void write_report(const std::string& path, const Report& r) {
  std::ofstream out(path);
  if (!out) throw Error("report: cannot write " + path);
  out << r.to_json() << "\n";
}

Report read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("report: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Report::from_json(ss.str());
}

std::string config_hash(const std::string& json_text) {
  std::string canon;
  try {
    canon = json::parse(json_text).dump();  // object keys are sorted by nlohmann::json
  } catch (const json::exception& e) {
    throw Error(std::string("config: malformed JSON: ") + e.what());
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lawbound
