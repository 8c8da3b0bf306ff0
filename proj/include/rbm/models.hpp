#pragma once

#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "rbm/batching.hpp"
#include "rbm/ewald.hpp"
#include "rbm/integrators.hpp"
#include "rbm/kernel.hpp"
#include "rbm/rng.hpp"
#include "rbm/samplers.hpp"
#include "rbm/state.hpp"

namespace rbm {

// --- Dyson Brownian motion -------------------------------------------------

/// (1/pi) sqrt(2 - x^2) on |x| <= sqrt(2).
double semicircle_density(double x);
double semicircle_cdf(double x);

/// d lambda_j = -lambda_j dt + (1/(N-1)) sum_k 1/(lambda_j - lambda_k) dt + dW_j / sqrt(N-1).
struct DysonModel {
  std::size_t n = 500;
  double split = 0.01;  // r0 for phi = -ln r = phi1 + phi2

  void validate() const;

  /// The SDE as a first-order particle system (d = 1).
  FirstOrderSystem sde() const;
  /// exp(-[(N-1)/2 sum x^2 - sum_{i<j} ln|x_i - x_j|]) with the split pair potential.
  GibbsTarget gibbs_target() const;
  /// N(0, 1/2) initial eigenvalues; the semicircle has the same variance.
  Points initial(RngStream& rng) const;

  /// phi1: -ln r for r >= r0, -ln r0 + (1 - r^2/r0^2)/2 inside (C^1 at r0).
  static double phi1(double r, double r0);
  static double phi1_derivative(double r, double r0);
  /// phi2 = -ln r - phi1 inside r0, 0 outside.
  static double phi2(double r, double r0);
};

// --- Wealth ----------------------------------------------------------------

inline constexpr double wealth_eta = std::numbers::sqrt2 * std::numbers::inv_sqrtpi;  // sqrt(2/pi)

/// Inverse-Gamma equilibrium with shape kappa/D + 1 and scale kappa eta / D.
double wealth_equilibrium_density(double y, double kappa, double diffusion,
                                  double eta = wealth_eta);
double wealth_equilibrium_cdf(double y, double kappa, double diffusion, double eta = wealth_eta);
/// kappa eta / (2D + kappa)
double wealth_equilibrium_mode(double kappa, double diffusion, double eta = wealth_eta);

/// dY_i = -(kappa/(N-1)) sum_k (Y_i - Y_k) dt + sqrt(2D) Y_i dW_i.
struct WealthModel {
  std::size_t n = 10000;
  double kappa = 1.0;
  double diffusion = 0.5;

  void validate() const;
  FirstOrderSystem system() const;
  /// |N(0,1)| wealth, whose mean is eta, the conserved mean of the equilibrium.
  Points initial(RngStream& rng) const;
};

/// Replaces negative wealth by its absolute value; returns how many were flipped.
std::size_t reflect_wealth(ParticleState& s);
double positive_fraction(const ParticleState& s);

// --- Cucker-Smale ----------------------------------------------------------

struct CuckerSmaleModel {
  std::size_t n = 256;
  double kappa = 1.0;
  double beta = 0.4;

  void validate() const;
  /// (1 + r^2)^(-beta/2)
  double psi(double r) const;
  /// Gaussian positions and velocities, unit variance per component.
  ParticleState initial(std::size_t dim, RngStream& rng) const;
};

/// dv_i = (kappa/(N-1)) sum_{j != i} psi(|x_j - x_i|)(v_j - v_i).
Points cs_rhs(const CuckerSmaleModel& m, const ParticleState& s);
/// Same with the sum restricted to each batch and kappa/(p-1) in front.
Points cs_rhs(const CuckerSmaleModel& m, const ParticleState& s, const BatchDivision& division);
/// Forward Euler: x += dt v, v += dt dv; p >= N uses the full sum.
ParticleState cs_rbm_step(const CuckerSmaleModel& m, const ParticleState& s, std::size_t p,
                          double dt, RngStream& rng);

struct FlockingFunctionals {
  double x_spread;  // (1/N^2) sum_{i,j} |x_i - x_j|^2
  double v_spread;  // (1/N^2) sum_{i,j} |v_i - v_j|^2
};
FlockingFunctionals flocking_functionals(const ParticleState& s);

// --- Consensus -------------------------------------------------------------

/// dq_i/dt = (kappa/(N-1)) sum_{j != i} (nubar_ij + a_ij Gamma(q_j - q_i)).
struct ConsensusModel {
  std::size_t n = 0;
  std::size_t dim = 1;
  double kappa = 1.0;
  std::vector<double> adjacency;  // n x n, empty => a_ij = 1
  Points nu;                      // intrinsic velocities, sum zero
  VectorField gamma;              // odd interaction, empty => Gamma(q) = q
  std::vector<double> nu_bar;     // n x n x dim, antisymmetric in (i, j)

  double a(std::size_t i, std::size_t j) const {
    return adjacency.empty() ? 1.0 : adjacency[i * n + j];
  }
  std::span<const double> nubar(std::size_t i, std::size_t j) const {
    return {nu_bar.data() + (i * n + j) * dim, dim};
  }

  /// Symmetry of a, sum nu = 0, antisymmetry of nubar, reconstruction of nu.
  void validate() const;
  /// Largest |(kappa/(N-1)) sum_j nubar_ij - nu_i| over all components.
  double reconstruction_error() const;
  /// Max |nubar_ij + nubar_ji|.
  double antisymmetry_error() const;

  /// nubar_ij = (N-1)(nu_i - nu_j)/(kappa N).
  static std::vector<double> default_decomposition(const Points& nu, double kappa);
  static ConsensusModel with_default_decomposition(Points nu, double kappa,
                                                   std::vector<double> adjacency = {});
};

Points consensus_rhs(const ConsensusModel& m, const Points& q);
/// Batched form: kappa/(p-1) over the batch for both terms.
Points consensus_rhs(const ConsensusModel& m, const Points& q, const BatchDivision& division);
/// Forward Euler with one random division per step (p >= N: full sum).
Points consensus_rbm_step(const ConsensusModel& m, const Points& q, std::size_t p, double dt,
                          RngStream& rng);

struct ConsensusFunctionals {
  double m2;        // (1/N) sum |q_j|^2
  double diameter;  // max_{i,j} |q_i - q_j|
};
ConsensusFunctionals consensus_functionals(const Points& q);

// --- Electrolyte -----------------------------------------------------------

/// Monovalent binary electrolyte: N/2 cations and N/2 anions in a cube.
struct ElectrolyteModel {
  std::size_t n = 300;
  double box = 10.0;
  double diameter = 0.2;  // LJ sigma
  double temperature = 1.0;
  double andersen_nu = 3.0;
  /// LJ force cutoff in units of sigma; 2^(1/6) keeps only the repulsive core.
  double lj_cutoff = lj_repulsive_cutoff;
  /// Ewald real-space cutoff; 0 selects EwaldParams::defaults.
  double real_cutoff = 0.0;

  static constexpr double lj_repulsive_cutoff = 1.122462048309373;

  void validate() const;
  double density() const { return static_cast<double>(n) / (box * box * box); }
  /// Random positions no closer than 0.8 sigma, Maxwell velocities at T with
  /// zero total momentum.
  PeriodicChargeSystem build(RngStream& rng) const;
  /// Ewald parameters, LJ with sigma = diameter cut at lj_cutoff sigma, Andersen thermostat.
  MdOptions md_options(std::size_t p, double dt, FourierMode mode = FourierMode::rbe) const;
};

/// ln(r rho(r)) = -1.941 r - 1.144 for the screening charge around an ion.
double dh_reference(double r);
inline constexpr double dh_slope = -1.941;
inline constexpr double dh_intercept = -1.144;

}  // namespace rbm
