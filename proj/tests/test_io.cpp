#include <gtest/gtest.h>

#include <random>
#include <unistd.h>

#include "lawbound/io.hpp"
#include "support.hpp"

using namespace lbtest;
using namespace lawbound::io;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("lawbound_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool same_field(const GridField& a, const GridField& b) { return a.compatible(b) && a.values() == b.values(); }

}  // namespace

TEST(Config, SchemaVersion) {
  EXPECT_NO_THROW(parse_config(R"({"schema_version": 1})"));
  EXPECT_THROW(parse_config(R"({"schema_version": 2})"), Error);
  EXPECT_THROW(parse_config(R"({"n": 3})"), Error);
  EXPECT_THROW(parse_config(R"({"schema_version": "1"})"), Error);
  EXPECT_THROW(parse_config("[1, 2]"), Error);
  EXPECT_THROW(parse_config("{not json"), Error);
}

TEST(Config, UnknownKeysRejected) {
  ConfigReader r(json::parse(R"({"a": 1, "b": {"c": 2.5}, "zzz": true})"));
  EXPECT_EQ(r.get<int>("a", 0), 1);
  auto b = r.child("b");
  EXPECT_EQ(b.need<double>("c"), 2.5);
  EXPECT_NO_THROW(b.finish());
  EXPECT_THROW(r.finish(), Error);
  ConfigReader t(json::parse(R"({"a": "x"})"));
  EXPECT_THROW(t.get<int>("a", 0), Error);
  EXPECT_THROW(t.need<int>("missing"), Error);
  EXPECT_EQ(ConfigReader(json()).get<int>("q", 7), 7);
}

TEST(Config, EulerAndKernelRoundTrip) {
  euler::Config c;
  c.grid = Grid(2, 32);
  c.dt = 0.02;
  c.K_init = 8;
  auto back = read_euler_config(ConfigReader(to_json(c)));
  EXPECT_EQ(back.grid.n, 32);
  EXPECT_EQ(back.dt, 0.02);
  EXPECT_EQ(back.K_init, 8);
  sampler::KernelSpec k;
  k.kind = sampler::KernelKind::PfOde;
  k.reference = c;
  k.noise_scale = 0.1;
  k.start = sampler::StartLaw::Gaussian;
  auto kb = read_kernel_spec(ConfigReader(to_json(k)));
  EXPECT_EQ(kb.kind, k.kind);
  EXPECT_EQ(kb.noise_scale, 0.1);
  EXPECT_EQ(kb.start, sampler::StartLaw::Gaussian);
  EXPECT_EQ(kb.reference.grid.n, 32);
  for (auto kind : {sampler::KernelKind::Deterministic, sampler::KernelKind::RectifiedFlow, sampler::KernelKind::PfOde,
                    sampler::KernelKind::PerturbedReference})
    EXPECT_EQ(parse_kind(kind_name(kind)), kind);
  EXPECT_THROW(parse_kind("diffusion"), Error);
  auto j = to_json(k);
  j["extra"] = 1;
  EXPECT_THROW(read_kernel_spec(ConfigReader(j)), Error);
}

TEST(Manifests, EnsembleAndCurveRoundTrip) {
  auto dir = scratch("manifest");
  Grid g(2, 16);
  auto e = random_ensemble(g, 3, 2, 4, 1.0, 1);
  auto path = write_ensemble(dir, "ens", e, 0.75);
  double t = -1;
  auto back = read_ensemble(path, &t);
  EXPECT_EQ(t, 0.75);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(same_field(back[i], e[i]));

  LawCurve c({0.0, 0.1}, {e, random_ensemble(g, 3, 2, 4, 1.0, 2)});
  auto cp = write_law_curve(dir / "sub", "curve", c);
  auto cb = read_law_curve(cp);
  EXPECT_EQ(cb.times, c.times);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(same_field(cb.ensembles[k][i], c.ensembles[k][i]));
  // manifests are relocatable
  fs::rename(dir / "sub", dir / "moved");
  EXPECT_NO_THROW(read_law_curve(dir / "moved" / cp.filename()));
  // wrong kind and future versions are rejected
  EXPECT_THROW(read_law_curve(path), Error);
  auto j = json::parse(read_text(path));
  j["schema_version"] = 2;
  write_text(dir / "future.json", j.dump());
  EXPECT_THROW(read_ensemble(dir / "future.json"), Error);
  EXPECT_THROW(read_ensemble(dir / "absent.json"), Error);
  fs::remove_all(dir);
}

TEST(Manifests, PathBundleRoundTrip) {
  auto dir = scratch("paths");
  Grid g(2, 16);
  sampler::PathBundle b;
  b.dt = 0.05;
  b.taus = {0.0, 0.5, 1.0};
  for (int m = 0; m < 2; ++m) {
    std::vector<std::vector<GridField>> steps;
    GridField x = random_divfree(g, 2, 4, m);
    for (int s = 0; s < 2; ++s) {
      std::vector<GridField> nodes{x, x + 0.1 * random_divfree(g, 2, 4, 10 + s), x + 0.2 * random_divfree(g, 2, 4, 20 + s)};
      x = nodes.back();
      steps.push_back(nodes);
    }
    b.segments.push_back(steps);
  }
  auto idx = write_path_bundle(dir, b);
  auto back = read_path_bundle(idx);
  EXPECT_EQ(back.dt, b.dt);
  EXPECT_EQ(back.taus, b.taus);
  ASSERT_EQ(back.members(), 2u);
  ASSERT_EQ(back.steps(), 2u);
  for (int m = 0; m < 2; ++m)
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < 3; ++k) EXPECT_TRUE(same_field(back.segments[m][s][k], b.segments[m][s][k]));
  EXPECT_TRUE(back.junctions_continuous());
  fs::remove_all(dir);
}

TEST(Csv, FormatAndRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(3.0), "3");
  EXPECT_EQ(format_number(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(format_number(NAN), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    double x = U(rng) * std::pow(10.0, int(U(rng)) % 200);
    EXPECT_EQ(std::stod(format_number(x)), x);
  }
  CsvTable t{{"t", "energy"}, {{0.0, 1.5}, {0.1, 1.0 / 3}}};
  EXPECT_EQ(csv_text(t), "t,energy\n0,1.5\n0.1," + format_number(1.0 / 3) + "\n");
  auto dir = scratch("csv");
  write_csv(dir / "a.csv", t);
  auto back = read_csv(dir / "a.csv");
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  write_text(dir / "bad.csv", "a,b\n1,2,3\n");
  EXPECT_THROW(read_csv(dir / "bad.csv"), Error);
  CsvTable ragged{{"a"}, {{1.0, 2.0}}};
  EXPECT_THROW(csv_text(ragged), Error);
  fs::remove_all(dir);
}
