#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lawbound/ensemble.hpp"
#include "lawbound/euler.hpp"
#include "lawbound/sampler.hpp"

namespace lawbound::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

// Tracks consumed keys so leftovers can be rejected.
class ConfigReader {
 public:
  explicit ConfigReader(json j, std::string where = "config");

  bool has(const std::string& key) const { return j_.contains(key); }
  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return fetch<T>(key);
  }
  template <class T>
  T need(const std::string& key) {
    require(j_.contains(key), where_ + ": missing field '" + key + "'");
    return fetch<T>(key);
  }
  // Sub-object; absent keys give an empty object.
  ConfigReader child(const std::string& key);
  // Throws on fields that were never read.
  void finish() const;
  const json& raw() const { return j_; }

 private:
  template <class T>
  T fetch(const std::string& key) {
    used_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(where_ + ": field '" + key + "' has the wrong type");
    }
  }
  json j_;
  std::string where_;
  std::set<std::string> used_;
};

// Parses a config document; schema_version must equal kSchemaVersion.
json parse_config(const std::string& text);
json load_config(const fs::path& path);
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

Grid read_grid(ConfigReader r);
euler::Config read_euler_config(ConfigReader r);
sampler::KernelSpec read_kernel_spec(ConfigReader r);
json to_json(const Grid& g);
json to_json(const euler::Config& c);
json to_json(const sampler::KernelSpec& k);
std::string kind_name(sampler::KernelKind k);
sampler::KernelKind parse_kind(const std::string& s);

// Member fields go next to the manifest as <stem>_<i>.lbf; paths stored relative.
fs::path write_ensemble(const fs::path& dir, const std::string& stem, const Ensemble& e, double time);
Ensemble read_ensemble(const fs::path& manifest, double* time = nullptr);
fs::path write_law_curve(const fs::path& dir, const std::string& stem, const LawCurve& c);
LawCurve read_law_curve(const fs::path& manifest);
fs::path write_path_bundle(const fs::path& dir, const sampler::PathBundle& b);
sampler::PathBundle read_path_bundle(const fs::path& index);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
std::string format_number(double x);  // shortest round-trip form
std::string csv_text(const CsvTable& t);
void write_csv(const fs::path& path, const CsvTable& t);
CsvTable read_csv(const fs::path& path);

}  // namespace lawbound::io
