#include "rbm/kernel.hpp"

#include <cmath>
#include <stdexcept>

#include "rbm/state.hpp"

namespace rbm::kernels {

KernelSpec zero() {
  KernelSpec k;
  k.force = [](std::span<const double>, std::span<double> out) {
    for (double& v : out) v = 0.0;
  };
  return k;
}

KernelSpec linear(double c) {
  KernelSpec k;
  k.force = [c](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
  };
  return k;
}

KernelSpec constant(std::vector<double> value) {
  KernelSpec k;
  k.force = [value](std::span<const double> x, std::span<double> out) {
    if (value.size() != x.size()) {
      throw std::invalid_argument("constant kernel: dimension mismatch");
    }
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = value[i];
  };
  return k;
}

KernelSpec sine() {
  KernelSpec k;
  k.force = [](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::sin(x[i]);
  };
  return k;
}

KernelSpec gaussian(double width) {
  const double inv = 1.0 / (2.0 * width * width);
  KernelSpec k;
  k.force = [inv](std::span<const double> x, std::span<double> out) {
    const double e = std::exp(-squared_norm(x) * inv);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * e;
  };
  return k;
}

namespace {

void radial_eval(const RadialProfile& f, std::span<const double> x, std::span<double> out) {
  const double r = std::sqrt(squared_norm(x));
  if (r == 0.0) {
    for (double& v : out) v = 0.0;
    return;
  }
  const double s = f(r) / r;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * x[i];
}

}  // namespace

KernelSpec radial(RadialProfile f, bool singular) {
  KernelSpec k;
  k.force = [f](std::span<const double> x, std::span<double> out) { radial_eval(f, x, out); };
  k.singular = singular;
  return k;
}

KernelSpec split_radial(RadialProfile f, double r0, bool singular) {
  if (!(r0 > 0.0)) throw std::invalid_argument("split radius must be positive");
  KernelSpec k = radial(f, singular);
  k.split_radius = r0;
  const double f0 = f(r0);
  k.smooth_part = [f, r0, f0](std::span<const double> x, std::span<double> out) {
    const double r = std::sqrt(squared_norm(x));
    if (r >= r0) {
      radial_eval(f, x, out);
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = f0 * x[i] / r0;
    }
  };
  k.short_part = [f, r0, f0](std::span<const double> x, std::span<double> out) {
    const double r = std::sqrt(squared_norm(x));
    if (r >= r0 || r == 0.0) {
      for (double& v : out) v = 0.0;
      return;
    }
    const double s = f(r) / r - f0 / r0;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * x[i];
  };
  return k;
}

KernelSpec lennard_jones(double epsilon, double sigma, double r0) {
  auto f = [epsilon, sigma](double r) {
    const double sr6 = std::pow(sigma / r, 6);
    return 24.0 * epsilon * (2.0 * sr6 * sr6 - sr6) / r;
  };
  return split_radial(f, r0, true);
}

KernelSpec inverse_1d() {
  KernelSpec k;
  k.force = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] == 0.0 ? 0.0 : 1.0 / x[0];
  };
  k.singular = true;
  return k;
}

}  // namespace rbm::kernels
