#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lawbound/certify.hpp"
#include "lawbound/euler.hpp"
#include "lawbound/rollout.hpp"
#include "lawbound/scores.hpp"
#include "lawbound/transport.hpp"
#include "lawbound/verify.hpp"

namespace py = pybind11;
using namespace lawbound;

namespace {

// (m, n, n) array for 2D grids, (m, n) for 1D
py::array_t<double> to_numpy(const GridField& f) {
  const Grid& g = f.grid();
  std::vector<py::ssize_t> shape{f.components(), g.n};
  if (g.d == 2) shape.push_back(g.n);
  py::array_t<double> out(shape);
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

GridField from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  require(a.ndim() == 2 || a.ndim() == 3, "expected an array of shape (m, n) or (m, n, n)");
  const int d = int(a.ndim()) - 1;
  const int n = int(a.shape(1));
  require(d == 1 || a.shape(2) == n, "grid must be square");
  std::vector<double> v(a.data(), a.data() + a.size());
  return GridField(Grid(d, n), int(a.shape(0)), std::move(v));
}

Ensemble to_ensemble(const std::vector<py::array_t<double>>& xs) {
  require(!xs.empty(), "empty ensemble");
  std::vector<GridField> m;
  for (const auto& x : xs) m.push_back(from_numpy(x));
  return Ensemble(std::move(m));
}

py::dict as_dict(const transport::MetricReport& m) {
  py::dict d;
  d["W1"] = m.W1;
  d["W2"] = m.W2;
  d["tail_a"] = m.tail_a;
  d["tail_b"] = m.tail_b;
  d["train_K"] = m.train_K;
  d["bound"] = m.bound;
  d["satisfied"] = m.satisfied;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lawbound, mod) {
  py::register_exception<Error>(mod, "LawboundError", PyExc_ValueError);

  mod.def("random_divfree",
          [](int n, double p, double K, std::uint64_t seed) { return to_numpy(random_divfree(Grid(2, n), p, K, seed)); },
          py::arg("n"), py::arg("p"), py::arg("K"), py::arg("seed"));
  mod.def("taylor_green", [](int n, double amp) { return to_numpy(euler::taylor_green(Grid(2, n), amp)); },
          py::arg("n"), py::arg("amplitude") = 1.0);
  mod.def("leray_project", [](py::array_t<double> u) { return to_numpy(leray_project(from_numpy(u))); });
  mod.def("project_leq", [](py::array_t<double> u, double K) { return to_numpy(project_leq(from_numpy(u), K)); });
  mod.def("divergence_norm", [](py::array_t<double> u) { return divergence_norm(from_numpy(u)); });
  mod.def("l2_norm", [](py::array_t<double> u) { return l2_norm(from_numpy(u)); });
  mod.def("inner", [](py::array_t<double> a, py::array_t<double> b) { return inner(from_numpy(a), from_numpy(b)); });

  mod.def("moment", [](const std::vector<py::array_t<double>>& e, int p) { return moment(to_ensemble(e), p); });
  mod.def("tail", [](const std::vector<py::array_t<double>>& e, double K) { return tail(to_ensemble(e), K); });

  mod.def("w1", [](const std::vector<py::array_t<double>>& a, const std::vector<py::array_t<double>>& b) {
    return transport::w1(to_ensemble(a), to_ensemble(b));
  });
  mod.def("w2", [](const std::vector<py::array_t<double>>& a, const std::vector<py::array_t<double>>& b) {
    return transport::w2(to_ensemble(a), to_ensemble(b));
  });
  mod.def("capacity_coverage",
          [](const std::vector<py::array_t<double>>& a, const std::vector<py::array_t<double>>& b, double K) {
            return as_dict(transport::capacity_coverage(to_ensemble(a), to_ensemble(b), K));
          });

  mod.def(
      "evolve",
      [](py::array_t<double> u, double t, double dt, int K_init) {
        GridField f = from_numpy(u);
        euler::Config c;
        c.grid = f.grid();
        c.dt = dt;
        c.K_init = K_init;
        py::gil_scoped_release release;
        GridField out = euler::evolve(f, t, c);
        py::gil_scoped_acquire acquire;
        return to_numpy(out);
      },
      py::arg("u"), py::arg("t"), py::arg("dt") = 0.01, py::arg("K_init") = 16);

  mod.def("gronwall_recursion", [](double d0, std::vector<double> L, std::vector<double> e) {
    return rollout::gronwall_recursion(d0, L, e);
  });
  mod.def("rollout_bound", [](double d0, std::vector<double> a, std::vector<double> e) {
    return rollout::rollout_bound(d0, a, e);
  });
  mod.def("constant_coefficient_bound", &rollout::constant_coefficient_bound);

  mod.def("crps", [](std::vector<double> P, std::vector<double> Q) { return scores::crps(P, Q); });
  mod.def("crps_point", [](std::vector<double> P, double y) { return scores::crps(P, y); });
  mod.def("w1_1d", [](std::vector<double> P, std::vector<double> Q) { return scores::w1_1d(P, Q); });
  mod.def("energy_score", [](const std::vector<scores::Vec>& P, const std::vector<scores::Vec>& Q) {
    return scores::energy_score(P, Q);
  });

  mod.def(
      "pf_identity",
      [](int dim, const std::string& schedule, double rate, double c, std::uint64_t seed, std::vector<double> taus) {
        require(schedule == "ve" || schedule == "vp", "schedule must be 've' or 'vp'");
        auto gd = certify::GaussianDiffusion::make(
            dim, schedule == "ve" ? certify::Schedule::VarianceExploding : certify::Schedule::VariancePreserving, rate,
            seed);
        auto r = certify::pf_identity(gd, taus, c);
        py::dict d;
        d["drift_side"] = r.drift_side;
        d["score_side"] = r.score_side;
        d["max_rel_gap"] = r.max_rel_gap;
        return d;
      },
      py::arg("dim"), py::arg("schedule"), py::arg("rate"), py::arg("c"), py::arg("seed"), py::arg("taus"));

  mod.def("criterion_name", &verify::criterion_name);
  mod.def(
      "run_criterion",
      [](int id, bool quick, std::uint64_t seed) {
        verify::SuiteOptions opt;
        opt.quick = quick;
        opt.seed = seed;
        Report r;
        {
          py::gil_scoped_release release;
          r = verify::run_criterion(id, opt);
        }
        return r.to_json();
      },
      py::arg("id"), py::arg("quick") = true, py::arg("seed") = 1);
}
