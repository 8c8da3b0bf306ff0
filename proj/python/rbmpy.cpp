// Python bindings for the rbm library. Arrays cross the boundary as float64
// numpy arrays of shape (N, d); randomness is driven by an integer seed.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "rbm/batching.hpp"
#include "rbm/diagnostics.hpp"
#include "rbm/ewald.hpp"
#include "rbm/integrators.hpp"
#include "rbm/models.hpp"
#include "rbm/rng.hpp"
#include "rbm/svgd.hpp"

namespace py = pybind11;
using namespace rbm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Points to_points(const Array& a) {
  if (a.ndim() == 1) {
    return Points(static_cast<std::size_t>(a.shape(0)), 1,
                  std::vector<double>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 2) throw std::invalid_argument("expected an array of shape (N,) or (N, d)");
  return Points(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Points& p) {
  Array out({p.size(), p.dim()});
  std::copy(p.flat().begin(), p.flat().end(), out.mutable_data());
  return out;
}

PeriodicChargeSystem charges(const Array& x, const std::vector<double>& q, double box) {
  Points pos = to_points(x);
  if (pos.dim() != 3) throw std::invalid_argument("positions must have shape (N, 3)");
  PeriodicChargeSystem sys{ParticleState(std::move(pos), std::nullopt, box), q};
  sys.validate();
  return sys;
}

EwaldParams ewald_params(std::size_t n, double box, double r_cut) {
  return r_cut > 0.0 ? EwaldParams::with_cutoff(r_cut, box) : EwaldParams::defaults(n, box);
}

KernelSpec toy_kernel(const std::string& name, double width) {
  if (name == "gaussian") return kernels::gaussian(width);
  if (name == "sine") return kernels::sine();
  if (name == "linear") return kernels::linear(width);
  if (name == "zero") return kernels::zero();
  throw std::invalid_argument("unknown kernel '" + name + "' (gaussian, sine, linear, zero)");
}

Array simulate_toy(const Array& x0, const std::string& method, std::size_t p, double dt,
                   std::size_t steps, std::uint64_t seed, const std::string& kernel, double width,
                   double sigma) {
  FirstOrderSystem sys;
  sys.drift = [](std::span<const double> x, std::span<double> out) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = -x[k];
  };
  sys.kernel = toy_kernel(kernel, width);
  ParticleState s(to_points(x0));
  if (s.size() < 2) throw std::invalid_argument("need at least two particles");
  sys.alpha_n = 1.0 / static_cast<double>(s.size() - 1);
  sys.sigma = sigma;
  Streams rng = Streams::for_replica(seed);
  for (std::size_t k = 0; k < steps; ++k) {
    if (method == "direct") {
      s = direct_step(s, sys, dt, rng);
    } else if (method == "rbm") {
      s = rbm_step_first_order(s, sys, p, dt, rng);
    } else if (method == "rbm-r") {
      s = rbmr_step(s, sys, p, dt, rng);
    } else {
      throw std::invalid_argument("unknown method '" + method + "' (direct, rbm, rbm-r)");
    }
  }
  return to_array(s.positions);
}

Array svgd_gaussian(const Array& x0, double mean, double variance, std::size_t p, double eta,
                    std::size_t steps, double bandwidth, std::uint64_t seed) {
  if (!(variance > 0.0)) throw std::invalid_argument("variance must be positive");
  SvgdState s{to_points(x0), SvgdKernel::gaussian(bandwidth),
              [mean, variance](std::span<const double> x, std::span<double> out) {
                for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean) / variance;
              }};
  RngStream rng(seed, 0);
  for (std::size_t k = 0; k < steps; ++k) rbm_svgd_step(s, p, eta, rng);
  return to_array(s.particles);
}

}  // namespace

PYBIND11_MODULE(rbmpy, m) {
  m.doc() = "Random-batch methods for interacting particle systems";
  m.attr("__version__") = "0.3.0";

  py::register_exception<NumericalError>(m, "NumericalError");

  m.def(
      "random_division",
      [](std::size_t n, std::size_t p, std::uint64_t seed) {
        RngStream rng(seed, 0);
        return random_division(n, p, rng).batches;
      },
      py::arg("n"), py::arg("p"), py::arg("seed") = 1,
      "Random partition of range(n) into batches of size p (remainder rule applied).");

  m.def("simulate_toy", &simulate_toy, py::arg("x0"), py::arg("method") = "rbm", py::arg("p") = 2,
        py::arg("dt") = 0.01, py::arg("steps") = 100, py::arg("seed") = 1,
        py::arg("kernel") = "gaussian", py::arg("width") = 1.0, py::arg("sigma") = 0.5,
        "Integrates dX = -X dt + 1/(N-1) sum K(X_i - X_j) dt + sigma dW with the given method.");

  m.def(
      "fourier_forces",
      [](const Array& x, const std::vector<double>& q, double box, double r_cut) {
        const auto sys = charges(x, q, box);
        return to_array(fourier_forces_exact(sys, ewald_params(q.size(), box, r_cut)));
      },
      py::arg("x"), py::arg("q"), py::arg("box"), py::arg("r_cut") = 0.0,
      "Exact Fourier-space Ewald forces, shape (N, 3).");

  m.def(
      "rbe_forces",
      [](const Array& x, const std::vector<double>& q, double box, std::size_t p, double r_cut,
         std::uint64_t seed) {
        const auto sys = charges(x, q, box);
        const auto params = ewald_params(q.size(), box, r_cut);
        KSampleBank bank(params.alpha, box, std::max<std::size_t>(p, 1000), RngStream(seed, 0));
        return to_array(rbe_forces(sys, bank.take(p), sum_S(params.alpha, box)));
      },
      py::arg("x"), py::arg("q"), py::arg("box"), py::arg("p") = 100, py::arg("r_cut") = 0.0,
      py::arg("seed") = 1, "Random Batch Ewald estimate of the Fourier-space forces, shape (N, 3).");

  m.def(
      "ewald_energy",
      [](const Array& x, const std::vector<double>& q, double box, double r_cut) {
        const auto sys = charges(x, q, box);
        const auto u = ewald_energy_terms(sys, ewald_params(q.size(), box, r_cut));
        return py::dict(py::arg("real") = u.real, py::arg("fourier") = u.fourier,
                        py::arg("self") = u.self, py::arg("total") = u.total());
      },
      py::arg("x"), py::arg("q"), py::arg("box"), py::arg("r_cut") = 0.0,
      "Ewald energy split into real, Fourier and self terms.");

  m.def("svgd_gaussian", &svgd_gaussian, py::arg("x0"), py::arg("mean") = 0.0,
        py::arg("variance") = 1.0, py::arg("p") = 8, py::arg("eta") = 0.05,
        py::arg("steps") = 2000, py::arg("bandwidth") = 1.0, py::arg("seed") = 1,
        "RBM-SVGD towards an isotropic Gaussian target.");

  m.def("semicircle_cdf", &semicircle_cdf, py::arg("x"));
  m.def("wealth_equilibrium_cdf", &wealth_equilibrium_cdf, py::arg("y"), py::arg("kappa"),
        py::arg("diffusion"), py::arg("eta") = wealth_eta);
  m.def(
      "wasserstein1",
      [](const std::vector<double>& a, const std::vector<double>& b) { return wasserstein1_1d(a, b); },
      py::arg("a"), py::arg("b"), "W1 distance between two 1-d samples.");
}
