#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rbm/kernel.hpp"
#include "rbm/state.hpp"

namespace rbm {

enum class KernelPart { full, short_range, smooth };

/// Evaluates K(r_i - r_j) for one state, applying the minimum image when the
/// state is periodic. Singular kernels are evaluated at no less than
/// regularization_radius(state); every such clamp is counted.
class PairForce {
 public:
  PairForce(const KernelSpec& kernel, const ParticleState& state,
            KernelPart part = KernelPart::full);

  /// acc += K(r_i - r_j)
  void accumulate(std::size_t i, std::size_t j, std::span<double> acc);
  /// acc += K(dx) for a precomputed displacement
  void accumulate_displacement(std::span<const double> dx, std::span<double> acc);

  std::size_t clamps() const noexcept { return clamps_; }
  double clamp_radius() const noexcept { return eps_; }

 private:
  VectorField field_;
  const ParticleState* state_;
  bool clamp_;
  double eps_ = 0.0;
  std::size_t clamps_ = 0;
  std::vector<double> dx_, kv_, disp_;
};

/// 1e-6 times the typical inter-particle spacing (V/N)^(1/d).
double regularization_radius(const ParticleState& state);

/// alpha_N * sum_{j != i} K(r_i - r_j), exact O(N).
std::vector<double> full_force(std::size_t i, const ParticleState& state,
                               const KernelSpec& kernel, double alpha_n);

/// alpha_N (N-1)/(p-1) * sum_{j in batch, j != i} K(r_i - r_j), p = |batch|.
std::vector<double> batch_force(std::size_t i, const ParticleState& state,
                                std::span<const std::size_t> batch, const KernelSpec& kernel,
                                double alpha_n);

/// Batch-average minus full-average interaction on particle i.
std::vector<double> chi(std::size_t i, const ParticleState& state,
                        std::span<const std::size_t> batch, const KernelSpec& kernel);

/// Exact variance (trace of the covariance for d > 1) of chi over uniformly
/// random divisions into batches of size p.
double chi_variance_exact(std::size_t i, const ParticleState& state, std::size_t p,
                          const KernelSpec& kernel);

}  // namespace rbm
