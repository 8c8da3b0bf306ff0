#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "rbm/cell_list.hpp"
#include "rbm/integrators.hpp"
#include "rbm/kernel.hpp"
#include "rbm/rng.hpp"
#include "rbm/state.hpp"

namespace rbm {

using ScalarField = std::function<double(std::span<const double>)>;

/// Gibbs measure exp(-beta H) with
///   H = sum_i w V(x_i) + sum_{i<j} w^2 (phi1 + phi2)(|x_i - x_j|),
/// where phi1 is smooth and long-range and phi2 short-range (possibly singular).
struct GibbsTarget {
  std::size_t n = 0;
  std::size_t dim = 1;
  double beta = 1.0;
  double w = 1.0;
  ScalarField potential;        // V, used for energy traces (optional)
  VectorField grad_potential;   // grad V, empty => V = 0
  RadialProfile phi1_derivative;  // d phi1/dr, empty => phi1 = 0
  RadialProfile phi1;             // phi1(r), optional (energy traces)
  RadialProfile phi2;             // phi2(r), empty => phi2 = 0
  double phi2_range = std::numeric_limits<double>::infinity();  // phi2 = 0 beyond

  void validate() const;
};

struct ProposalOptions {
  bool noise = true;        // false: drop the Brownian term (test mode)
  bool full_batch = false;  // true: use every other particle instead of p - 1
};

/// m Euler-Maruyama steps of the single-particle overdamped Langevin equation
/// for particle i with all others frozen. Each step estimates the phi1 force
/// from a fresh uniform subset of p - 1 other particles.
std::vector<double> rbmc_propose(std::size_t i, const Points& config, const GibbsTarget& target,
                                 std::size_t m, std::size_t p, double dt, RngStream& rng,
                                 const ProposalOptions& opt = {});

/// beta w^2 sum_{j != i} (phi2(x* - x_j) - phi2(x - x_j)); +inf if x* hits a singularity.
/// Uses the spatial hash when given, otherwise scans all particles.
double rbmc_phi2_delta(std::size_t i, std::span<const double> old_pos,
                       std::span<const double> candidate, const Points& config,
                       const GibbsTarget& target, const SpatialHash* grid = nullptr);

/// Metropolis test with probability min{1, exp(-delta)}.
bool rbmc_accept(std::size_t i, std::span<const double> old_pos,
                 std::span<const double> candidate, const Points& config,
                 const GibbsTarget& target, RngStream& rng, const SpatialHash* grid = nullptr);

struct McStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t nonfinite = 0;  // candidates rejected for NaN/Inf
  std::size_t clamps = 0;     // pair distances regularised in phi1
  std::vector<double> energy_trace;  // per sweep, when recorded

  double acceptance_rate() const noexcept {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

struct ProposalWorkspace;

/// A single RBMC chain. step() is one pick-propose-accept iteration and
/// sweep() performs N of them.
class RbmcChain {
 public:
  RbmcChain(GibbsTarget target, Points initial, std::size_t m, std::size_t p,
            StepSchedule schedule, RngStream rng, ProposalOptions opt = {});

  void step();
  void sweep();

  const Points& config() const noexcept { return x_; }
  const McStats& stats() const noexcept { return stats_; }
  McStats& stats() noexcept { return stats_; }
  std::size_t iterations() const noexcept { return iter_; }
  const GibbsTarget& target() const noexcept { return target_; }

  /// H(x) with the full pair potential, O(N^2). Needs potential, phi1 and phi2.
  double energy() const;

 private:
  GibbsTarget target_;
  Points x_;
  std::size_t m_, p_;
  StepSchedule schedule_;
  RngStream rng_;
  ProposalOptions opt_;
  std::unique_ptr<SpatialHash> grid_;
  McStats stats_;
  std::size_t iter_ = 0;
  std::vector<double> cand_;
  std::shared_ptr<ProposalWorkspace> ws_;
};

/// One pick-propose-accept iteration on a bare configuration (no spatial hash).
void rbmc_step(Points& config, const GibbsTarget& target, std::size_t m, std::size_t p,
               double dt, RngStream& rng, McStats& stats, const ProposalOptions& opt = {});

}  // namespace rbm
