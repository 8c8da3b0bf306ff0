#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rbm/batching.hpp"
#include "rbm/kernel.hpp"
#include "rbm/rng.hpp"
#include "rbm/state.hpp"

namespace rbm {

/// Symmetric positive definite kernel K(x, y) with its gradient in y.
struct SvgdKernel {
  std::function<double(std::span<const double> x, std::span<const double> y)> value;
  /// out = grad_y K(x, y)
  std::function<void(std::span<const double> x, std::span<const double> y, std::span<double> out)>
      grad_y;

  /// K(x, y) = exp(-|x - y|^2 / h)
  static SvgdKernel gaussian(double bandwidth);
};

/// Particles plus the target pi = exp(-V) through its score grad V.
struct SvgdState {
  Points particles;
  SvgdKernel kernel;
  VectorField grad_v;
};

/// (1/N) sum_j [grad_y K(r_i, r_j) - K(r_i, r_j) grad V(r_j)], full batch.
std::vector<double> svgd_velocity(std::size_t i, const SvgdState& s);

/// Velocities of all particles. batch_size = N gives the full-batch drift;
/// otherwise one random division is drawn and the off-diagonal sum is
/// restricted to the batch with weight (N-1)/(N(p-1)).
Points svgd_velocities(const SvgdState& s, std::size_t batch_size, RngStream* rng);
/// Velocities for a given division of the particles.
Points svgd_velocities(const SvgdState& s, const BatchDivision& division);

/// Step-size rules for the particle update r <- r + eta_k * v.
class SvgdSchedule {
 public:
  static SvgdSchedule constant(double eta);
  /// eta_k = eta / (k + k0)
  static SvgdSchedule inverse(double eta, double k0 = 0.0);
  /// Per-coordinate eta / sqrt(eps + sum of past squared velocities).
  static SvgdSchedule adagrad(double eta, double eps = 1e-8);

  /// Applies step k (k >= 1) in place.
  void apply(Points& x, const Points& v, std::size_t k);

 private:
  enum class Kind { constant, inverse, adagrad };
  SvgdSchedule(Kind kind, double eta, double aux) : kind_(kind), eta_(eta), aux_(aux) {}
  Kind kind_;
  double eta_;
  double aux_;
  std::vector<double> accum_;
};

/// Largest |coordinate| tolerated before a step is declared divergent.
inline constexpr double svgd_divergence_limit = 1e6;

/// One RBM-SVGD iteration with step eta (p = N reproduces full-batch SVGD).
void rbm_svgd_step(SvgdState& s, std::size_t p, double eta, RngStream& rng);

/// Same with a schedule; k is the 1-based iteration index.
void rbm_svgd_step(SvgdState& s, std::size_t p, SvgdSchedule& schedule, std::size_t k,
                   RngStream& rng);

}  // namespace rbm
