#include "rbm/forces.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rbm {

namespace {

const VectorField& select(const KernelSpec& k, KernelPart part) {
  switch (part) {
    case KernelPart::short_range:
      if (!k.short_part) throw std::invalid_argument("kernel has no short-range part");
      return k.short_part;
    case KernelPart::smooth:
      if (!k.smooth_part) throw std::invalid_argument("kernel has no smooth part");
      return k.smooth_part;
    case KernelPart::full:
      break;
  }
  if (!k.force) throw std::invalid_argument("kernel has no force");
  return k.force;
}

void check_index(std::size_t i, const ParticleState& s) {
  if (i >= s.size()) {
    throw std::out_of_range("particle index " + std::to_string(i) + " out of range");
  }
}

}  // namespace

double regularization_radius(const ParticleState& state) {
  const std::size_t n = std::max<std::size_t>(state.size(), 1);
  const std::size_t d = std::max<std::size_t>(state.dim(), 1);
  double extent = 0.0;
  if (state.box_length) {
    extent = *state.box_length;
  } else {
    for (std::size_t c = 0; c < state.dim(); ++c) {
      double lo = 0.0, hi = 0.0;
      for (std::size_t i = 0; i < state.size(); ++i) {
        const double x = state.positions[i][c];
        if (i == 0 || x < lo) lo = x;
        if (i == 0 || x > hi) hi = x;
      }
      extent = std::max(extent, hi - lo);
    }
    if (extent == 0.0) extent = 1.0;
  }
  return 1e-6 * extent / std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d));
}

PairForce::PairForce(const KernelSpec& kernel, const ParticleState& state, KernelPart part)
    : field_(select(kernel, part)),
      state_(&state),
      clamp_(kernel.singular && part != KernelPart::smooth),
      dx_(state.dim()),
      kv_(state.dim()),
      disp_(state.dim()) {
  if (clamp_) eps_ = regularization_radius(state);
}

void PairForce::accumulate_displacement(std::span<const double> dx, std::span<double> acc) {
  std::span<const double> arg = dx;
  if (clamp_) {
    const double r = std::sqrt(squared_norm(dx));
    if (r < eps_) {
      ++clamps_;
      if (r == 0.0) {
        std::fill(dx_.begin(), dx_.end(), 0.0);
        dx_[0] = eps_;
      } else {
        for (std::size_t c = 0; c < dx.size(); ++c) dx_[c] = dx[c] * (eps_ / r);
      }
      arg = dx_;
    }
  }
  field_(arg, kv_);
  for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += kv_[c];
}

void PairForce::accumulate(std::size_t i, std::size_t j, std::span<double> acc) {
  displacement(state_->positions[i], state_->positions[j], state_->box_length, disp_);
  accumulate_displacement(disp_, acc);
}

std::vector<double> full_force(std::size_t i, const ParticleState& state,
                               const KernelSpec& kernel, double alpha_n) {
  check_index(i, state);
  if (state.size() < 2) throw std::invalid_argument("full_force needs N >= 2");
  PairForce pf(kernel, state);
  std::vector<double> acc(state.dim(), 0.0);
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (j != i) pf.accumulate(i, j, acc);
  }
  for (double& v : acc) v *= alpha_n;
  return acc;
}

std::vector<double> batch_force(std::size_t i, const ParticleState& state,
                                std::span<const std::size_t> batch, const KernelSpec& kernel,
                                double alpha_n) {
  check_index(i, state);
  if (std::find(batch.begin(), batch.end(), i) == batch.end()) {
    throw std::invalid_argument("batch_force: particle " + std::to_string(i) +
                                " is not in the batch");
  }
  if (batch.size() < 2) throw std::invalid_argument("batch size must be >= 2");
  PairForce pf(kernel, state);
  std::vector<double> acc(state.dim(), 0.0);
  for (std::size_t j : batch) {
    if (j != i) pf.accumulate(i, j, acc);
  }
  const double n1 = static_cast<double>(state.size() - 1);
  const double p1 = static_cast<double>(batch.size() - 1);
  const double scale = alpha_n * (n1 / p1);
  for (double& v : acc) v *= scale;
  return acc;
}

std::vector<double> chi(std::size_t i, const ParticleState& state,
                        std::span<const std::size_t> batch, const KernelSpec& kernel) {
  const double n1 = static_cast<double>(state.size() - 1);
  auto b = batch_force(i, state, batch, kernel, 1.0 / n1);
  auto f = full_force(i, state, kernel, 1.0 / n1);
  for (std::size_t c = 0; c < b.size(); ++c) b[c] -= f[c];
  return b;
}

double chi_variance_exact(std::size_t i, const ParticleState& state, std::size_t p,
                          const KernelSpec& kernel) {
  check_index(i, state);
  const std::size_t n = state.size();
  if (p < 2 || p > n) throw std::invalid_argument("chi_variance_exact: need 2 <= p <= N");
  if (p == n) return 0.0;

  const std::size_t d = state.dim();
  PairForce pf(kernel, state);
  std::vector<std::vector<double>> k(n, std::vector<double>(d, 0.0));
  std::vector<double> mean(d, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    pf.accumulate(i, j, k[j]);
    for (std::size_t c = 0; c < d; ++c) mean[c] += k[j][c];
  }
  for (double& m : mean) m /= static_cast<double>(n - 1);
  double lambda = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    for (std::size_t c = 0; c < d; ++c) {
      const double e = k[j][c] - mean[c];
      lambda += e * e;
    }
  }
  lambda /= static_cast<double>(n - 2);
  const double pref = 1.0 / static_cast<double>(p - 1) - 1.0 / static_cast<double>(n - 1);
  return pref * lambda;
}

}  // namespace rbm
