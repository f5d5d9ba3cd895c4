#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "critsde/drift.hpp"
#include "critsde/heat.hpp"
#include "critsde/rng.hpp"
#include "critsde/sde.hpp"
#include "critsde/spaces.hpp"
#include "critsde/stats.hpp"
#include "critsde/zvonkin.hpp"

namespace py = pybind11;
using namespace critsde;

namespace {

ExponentPair make_exps(double p, double q, int d, double T) {
  ExponentPair exps;
  exps.p = p;
  exps.q = q;
  exps.dim = d;
  exps.T = T;
  exps.validate();
  return exps;
}

std::map<std::string, double> constants_dict(double p, double q, int d,
                                             double T) {
  const ExponentPair exps = make_exps(p, q, d, T);
  const KernelConstants kc = compute_constants(exps);
  return {{"c_sup", kc.c_sup},
          {"c_grad", kc.c_grad},
          {"c0", kc.c0},
          {"theta", kc.theta}};
}

DriftSpec make_drift(double example_amplitude, double T, double q) {
  ExponentPair exps;
  exps.T = T;
  exps.q = q;
  DriftSpec drift;
  drift.horizon = T;
  if (example_amplitude != 0.0) {
    SpatialProfile base = gaussian_density_profile();
    base.amplitude *= example_amplitude;
    drift = build_example_drift(base, exps);
  }
  return drift;
}

std::vector<double> simulate_terminal(std::size_t n_paths, std::size_t n_steps,
                                      std::uint64_t seed, double x0,
                                      double example_amplitude, double T) {
  StepSchedule sched;
  sched.horizon = T;
  sched.n_steps = n_steps;
  SimOptions opt;
  opt.seed = seed;
  opt.n_paths = n_paths;
  opt.x0 = x0;
  const PathEnsemble ens =
      euler_maruyama(make_drift(example_amplitude, T, 4.0), sched, opt);
  return ens.clean_terminal();
}

double example_drift_norm(double amplitude, double p, double q, double T) {
  const ExponentPair exps = make_exps(p, q, 1, T);
  SpatialProfile base = gaussian_density_profile();
  base.amplitude *= amplitude;
  const DriftSpec drift = build_example_drift(base, exps);
  return drift.b1->reversed_weighted_norm(exps);
}

double zvonkin_roundtrip_error(double base, double x0, double T) {
  SigmaSpec sigma;
  sigma.kind = SigmaSpec::Kind::tanh_shift;
  sigma.base = base;
  const ZvonkinMap map = build_phi_around(sigma, x0, T);
  double err = 0.0;
  const std::size_t n = 2049;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = map.lo + (map.hi - map.lo) * static_cast<double>(i) /
                                 static_cast<double>(n - 1);
    err = std::max(err, std::abs(map.psi_at(map.phi_at(x)) - x));
  }
  return err;
}

double lr_norm(const std::vector<double>& sample, double r,
               std::size_t n_bins) {
  return lr_norm_proxy(kde(sample, n_bins), r);
}

std::pair<double, double> philox_uniform_pair(std::uint64_t seed,
                                              std::uint64_t path,
                                              std::uint64_t step) {
  PathRng rng(seed, path);
  const auto u = rng.uniform_pair(step);
  return {u[0], u[1]};
}

}  // namespace

PYBIND11_MODULE(_critsde, m) {
  m.doc() = "numerical laboratory for SDEs with critical drift";

  m.def("constants", &constants_dict, py::arg("p") = 2.0, py::arg("q") = 4.0,
        py::arg("d") = 1, py::arg("T") = 1.0,
        "heat-kernel constants {c_sup, c_grad, c0, theta}");
  m.def("example_drift_norm", &example_drift_norm, py::arg("amplitude"),
        py::arg("p") = 2.0, py::arg("q") = 4.0, py::arg("T") = 1.0,
        "reversed weighted norm of the critical example drift");
  m.def("simulate_terminal", &simulate_terminal, py::arg("n_paths"),
        py::arg("n_steps") = 256, py::arg("seed") = 2026, py::arg("x0") = 0.0,
        py::arg("example_amplitude") = 0.0, py::arg("T") = 1.0,
        "terminal samples of the Euler scheme with unit noise");
  m.def("ks_distance", &ks_distance, py::arg("a"), py::arg("b"),
        "two-sample Kolmogorov-Smirnov statistic");
  m.def("lr_norm", &lr_norm, py::arg("sample"), py::arg("r"),
        py::arg("n_bins") = 512,
        "L^r norm proxy of a kernel density estimate");
  m.def("zvonkin_roundtrip_error", &zvonkin_roundtrip_error,
        py::arg("base") = 2.0, py::arg("x0") = 0.0, py::arg("T") = 1.0,
        "sup |Psi(Phi(x)) - x| over the working interval");
  m.def("philox_uniform_pair", &philox_uniform_pair, py::arg("seed"),
        py::arg("path"), py::arg("step"),
        "counter-based uniform pair in (0, 1]");
}
