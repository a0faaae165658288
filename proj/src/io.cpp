#include "lawbound/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lawbound::io {

ConfigReader::ConfigReader(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
  if (j_.is_null()) j_ = json::object();
  require(j_.is_object(), where_ + ": expected a JSON object");
}

ConfigReader ConfigReader::child(const std::string& key) {
  used_.insert(key);
  return ConfigReader(j_.contains(key) ? j_.at(key) : json::object(), where_ + "." + key);
}

void ConfigReader::finish() const {
  for (const auto& [k, v] : j_.items())
    if (!used_.count(k)) throw Error(where_ + ": unknown field '" + k + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(bool(out), "cannot write " + path.string());
  out << text;
  require(bool(out), "write failed for " + path.string());
}

namespace {
json parse_versioned(const std::string& text, const std::string& what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(what + ": malformed JSON (" + std::string(e.what()) + ")");
  }
  require(j.is_object(), what + ": expected a JSON object");
  require(j.contains("schema_version") && j["schema_version"].is_number_integer(), what + ": missing schema_version");
  int v = j["schema_version"].get<int>();
  require(v == kSchemaVersion, what + ": unsupported schema_version " + std::to_string(v));
  return j;
}

json parse_manifest(const fs::path& p, const std::string& kind) {
  json j = parse_versioned(read_text(p), p.string());
  require(j.value("kind", "") == kind, p.string() + ": expected a " + kind + " manifest");
  return j;
}
}  // namespace

json parse_config(const std::string& text) { return parse_versioned(text, "config"); }

json load_config(const fs::path& path) { return parse_versioned(read_text(path), path.string()); }

Grid read_grid(ConfigReader r) {
  Grid g(r.get<int>("d", 2), r.get<int>("n", 64));
  r.finish();
  return g;
}

euler::Config read_euler_config(ConfigReader r) {
  euler::Config c;
  c.grid = read_grid(r.child("grid"));
  c.dt = r.get<double>("dt", c.dt);
  c.dealias = r.get<double>("dealias", c.dealias);
  c.K_init = r.get<int>("K_init", c.K_init);
  c.cfl = r.get<double>("cfl", c.cfl);
  r.finish();
  euler::validate(c);
  return c;
}

std::string kind_name(sampler::KernelKind k) {
  switch (k) {
    case sampler::KernelKind::Deterministic: return "deterministic";
    case sampler::KernelKind::RectifiedFlow: return "rectified_flow";
    case sampler::KernelKind::PfOde: return "pf_ode";
    case sampler::KernelKind::PerturbedReference: return "perturbed_reference";
  }
  return "?";
}

sampler::KernelKind parse_kind(const std::string& s) {
  for (auto k : {sampler::KernelKind::Deterministic, sampler::KernelKind::RectifiedFlow, sampler::KernelKind::PfOde,
                 sampler::KernelKind::PerturbedReference})
    if (kind_name(k) == s) return k;
  throw Error("unknown kernel kind '" + s + "'");
}

sampler::KernelSpec read_kernel_spec(ConfigReader r) {
  sampler::KernelSpec k;
  k.kind = parse_kind(r.get<std::string>("kind", kind_name(k.kind)));
  k.internal_steps = r.get<int>("internal_steps", k.internal_steps);
  k.noise_scale = r.get<double>("noise_scale", k.noise_scale);
  k.noise_band = r.get<int>("noise_band", k.noise_band);
  std::string start = r.get<std::string>("start", k.start == sampler::StartLaw::Delta ? "delta" : "gaussian");
  require(start == "delta" || start == "gaussian", "kernel: start must be 'delta' or 'gaussian'");
  k.start = start == "delta" ? sampler::StartLaw::Delta : sampler::StartLaw::Gaussian;
  k.curl_amplitude = r.get<double>("curl_amplitude", k.curl_amplitude);
  k.curl_band = r.get<int>("curl_band", k.curl_band);
  k.step_dt = r.get<double>("step_dt", k.step_dt);
  k.pf_data_scale = r.get<double>("pf_data_scale", k.pf_data_scale);
  k.reference = read_euler_config(r.child("reference"));
  r.finish();
  sampler::validate(k);
  return k;
}

json to_json(const Grid& g) { return {{"d", g.d}, {"n", g.n}}; }

json to_json(const euler::Config& c) {
  return {{"grid", to_json(c.grid)}, {"dt", c.dt}, {"dealias", c.dealias}, {"K_init", c.K_init}, {"cfl", c.cfl}};
}

json to_json(const sampler::KernelSpec& k) {
  return {{"kind", kind_name(k.kind)},
          {"internal_steps", k.internal_steps},
          {"noise_scale", k.noise_scale},
          {"noise_band", k.noise_band},
          {"start", k.start == sampler::StartLaw::Delta ? "delta" : "gaussian"},
          {"curl_amplitude", k.curl_amplitude},
          {"curl_band", k.curl_band},
          {"step_dt", k.step_dt},
          {"pf_data_scale", k.pf_data_scale},
          {"reference", to_json(k.reference)}};
}

// ---------------------------------------------------------------- manifests

fs::path write_ensemble(const fs::path& dir, const std::string& stem, const Ensemble& e, double time) {
  require(e.size() > 0, "write ensemble: empty ensemble");
  fs::create_directories(dir);
  json members = json::array();
  for (std::size_t i = 0; i < e.size(); ++i) {
    std::string name = stem + "_" + std::to_string(i) + ".lbf";
    write_lbf1((dir / name).string(), e[i]);
    members.push_back(name);
  }
  json m = {{"schema_version", kSchemaVersion}, {"kind", "ensemble"},          {"time", time},
            {"grid", to_json(e.grid())},        {"components", e.components()}, {"members", members}};
  fs::path p = dir / (stem + ".json");
  write_text(p, m.dump(2) + "\n");
  return p;
}

Ensemble read_ensemble(const fs::path& manifest, double* time) {
  json j = parse_manifest(manifest, "ensemble");
  ConfigReader r(j, manifest.string());
  r.get<int>("schema_version", 1);
  r.get<std::string>("kind", "");
  double t = r.get<double>("time", 0.0);
  Grid g = read_grid(r.child("grid"));
  int m = r.need<int>("components");
  auto names = r.need<std::vector<std::string>>("members");
  r.finish();
  require(!names.empty(), manifest.string() + ": no members");
  std::vector<GridField> fields;
  for (const auto& n : names) {
    fs::path p = manifest.parent_path() / n;
    require(fs::exists(p), "missing member file " + p.string());
    GridField f = read_lbf1(p.string());
    require(f.grid() == g && f.components() == m, p.string() + ": grid descriptor mismatch");
    fields.push_back(std::move(f));
  }
  if (time) *time = t;
  return Ensemble(std::move(fields));
}

fs::path write_law_curve(const fs::path& dir, const std::string& stem, const LawCurve& c) {
  json entries = json::array();
  for (std::size_t k = 0; k < c.size(); ++k) {
    std::string s = stem + "_t" + std::to_string(k);
    write_ensemble(dir, s, c.ensembles[k], c.times[k]);
    entries.push_back({{"time", c.times[k]}, {"ensemble", s + ".json"}});
  }
  json m = {{"schema_version", kSchemaVersion}, {"kind", "law_curve"}, {"entries", entries}};
  fs::path p = dir / (stem + ".json");
  write_text(p, m.dump(2) + "\n");
  return p;
}

LawCurve read_law_curve(const fs::path& manifest) {
  json j = parse_manifest(manifest, "law_curve");
  ConfigReader r(j, manifest.string());
  r.get<int>("schema_version", 1);
  r.get<std::string>("kind", "");
  json entries = r.need<json>("entries");
  r.finish();
  require(entries.is_array(), manifest.string() + ": entries must be an array");
  std::vector<double> times;
  std::vector<Ensemble> ens;
  for (const auto& e : entries) {
    ConfigReader er(e, manifest.string() + ".entries");
    double t = er.need<double>("time");
    std::string path = er.need<std::string>("ensemble");
    er.finish();
    double stamp = 0;
    ens.push_back(read_ensemble(manifest.parent_path() / path, &stamp));
    require(stamp == t, manifest.string() + ": time stamp disagrees with ensemble manifest");
    times.push_back(t);
  }
  return LawCurve(std::move(times), std::move(ens));
}

fs::path write_path_bundle(const fs::path& dir, const sampler::PathBundle& b) {
  fs::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < b.members(); ++i) {
    json per_step = json::array();
    for (std::size_t s = 0; s < b.segments[i].size(); ++s) {
      json nodes = json::array();
      for (std::size_t k = 0; k < b.segments[i][s].size(); ++k) {
        std::string name = "m" + std::to_string(i) + "_s" + std::to_string(s) + "_k" + std::to_string(k) + ".lbf";
        write_lbf1((dir / name).string(), b.segments[i][s][k]);
        nodes.push_back(name);
      }
      per_step.push_back(nodes);
    }
    files.push_back(per_step);
  }
  json m = {{"schema_version", kSchemaVersion}, {"kind", "path_bundle"}, {"dt", b.dt}, {"taus", b.taus},
            {"files", files}};
  fs::path p = dir / "index.json";
  write_text(p, m.dump(2) + "\n");
  return p;
}

sampler::PathBundle read_path_bundle(const fs::path& index) {
  json j = parse_manifest(index, "path_bundle");
  sampler::PathBundle b;
  b.dt = j.at("dt").get<double>();
  b.taus = j.at("taus").get<std::vector<double>>();
  for (const auto& per_step : j.at("files")) {
    std::vector<std::vector<GridField>> m;
    for (const auto& nodes : per_step) {
      std::vector<GridField> seg;
      for (const auto& n : nodes) seg.push_back(read_lbf1((index.parent_path() / n.get<std::string>()).string()));
      require(seg.size() == b.taus.size(), index.string() + ": node count differs from taus");
      m.push_back(std::move(seg));
    }
    b.segments.push_back(std::move(m));
  }
  return b;
}

// ---------------------------------------------------------------- CSV

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_text(const CsvTable& t) {
  std::string s;
  for (std::size_t i = 0; i < t.header.size(); ++i) s += (i ? "," : "") + t.header[i];
  s += "\n";
  for (const auto& row : t.rows) {
    require(row.size() == t.header.size(), "csv: row width differs from header");
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_number(row[i]);
    s += "\n";
  }
  return s;
}

void write_csv(const fs::path& path, const CsvTable& t) { write_text(path, csv_text(t)); }

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  require(bool(std::getline(in, line)), path.string() + ": empty CSV");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    for (std::string cell; std::getline(rs, cell, ',');) row.push_back(std::stod(cell));
    require(row.size() == t.header.size(), path.string() + ": ragged CSV row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace lawbound::io
