#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rbm {

/// A map R^d -> R^d written into `out` (same length as `x`).
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Pairwise interaction kernel K. When a split radius is present,
/// K = K1 + K2 with K1 vanishing for |x| >= r0 and K2 smooth and bounded.
struct KernelSpec {
  VectorField force;
  std::optional<double> split_radius;
  VectorField short_part;
  VectorField smooth_part;
  /// Unbounded at the origin; direct evaluation clamps small separations.
  bool singular = false;

  bool has_split() const noexcept { return split_radius.has_value(); }
};

/// Radial force profile f(r): K(x) = f(|x|) x / |x|. Positive f is repulsive.
using RadialProfile = std::function<double(double r)>;

namespace kernels {

KernelSpec zero();
/// K(x) = c x
KernelSpec linear(double c = 1.0);
/// K(x) = c for every x (not antisymmetric; used in estimator tests)
KernelSpec constant(std::vector<double> value);
/// K(x)_k = sin(x_k), globally Lipschitz.
KernelSpec sine();
/// K(x) = x exp(-|x|^2 / (2 w^2)): bounded and Lipschitz.
KernelSpec gaussian(double width = 1.0);
/// K(x) = f(|x|) x/|x| with no split.
KernelSpec radial(RadialProfile f, bool singular);
/// Radial kernel split at r0: inside r0 the smooth part continues linearly,
/// K2(x) = f(r0) x / r0, and K1 = K - K2; outside, K1 = 0 and K2 = K.
KernelSpec split_radial(RadialProfile f, double r0, bool singular);
/// Lennard-Jones force 24 eps (2 (s/r)^12 - (s/r)^6) / r, split at r0.
KernelSpec lennard_jones(double epsilon, double sigma, double r0);
/// One-dimensional Coulomb-log kernel K(x) = 1/x (singular, no split).
KernelSpec inverse_1d();

}  // namespace kernels

}  // namespace rbm
