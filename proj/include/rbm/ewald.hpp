#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rbm/integrators.hpp"
#include "rbm/rng.hpp"
#include "rbm/state.hpp"

namespace rbm {

/// Point charges in a periodic cube (d = 3), reduced units with phi(r) = q/r.
struct PeriodicChargeSystem {
  ParticleState state;
  std::vector<double> charges;

  std::size_t size() const noexcept { return state.size(); }
  double box() const { return *state.box_length; }
  double volume() const { return box() * box() * box(); }
  double net_charge() const;

  /// Shape checks plus electroneutrality |sum q| <= 1e-12.
  void validate() const;
};

/// Integer lattice vector m; the frequency is k = 2 pi m / L.
using LatticeVector = std::array<int, 3>;

struct EwaldParams {
  double alpha = 1.0;    // splitting parameter
  double r_cut = 0.0;    // real-space cutoff, < L/2
  int m_cut = 0;         // Fourier cutoff |m| <= m_cut, i.e. k_c = 2 pi m_cut / L
  std::size_t p = 100;   // frequencies per RBE step

  double k_cut(double box) const;
  void validate(double box) const;

  /// sqrt(alpha) = (N/L^3)^(1/3), r_cut = min(0.49 L, 4/sqrt(alpha)),
  /// m_cut = reference_mcut(alpha, L).
  static EwaldParams defaults(std::size_t n, double box, std::size_t p = 100);
  /// Same accuracy rule for a given cutoff: alpha = 16 / r_cut^2.
  static EwaldParams with_cutoff(double r_cut, double box, std::size_t p = 100);
};

/// S = H^3 - 1 with H = sum_m exp(-pi^2 m^2 / (alpha L^2)).
double sum_S(double alpha, double box);

/// ceil(L sqrt(alpha ln(1/eps)) / pi): the Fourier tail beyond it is below eps.
int reference_mcut(double alpha, double box, double eps = 1e-12);

/// Pre-sampled frequency vectors from the discrete Gaussian
/// P(m) ~ exp(-pi^2 |m|^2 / (alpha L^2)), m != 0, drawn by an independence
/// Metropolis-Hastings chain whose proposal rounds N(0, alpha L^2 / (2 pi^2))
/// per component. Consumed in order; refilled by continuing the chain.
class KSampleBank {
 public:
  KSampleBank(double alpha, double box, std::size_t capacity, RngStream rng,
              std::size_t burn_in = 1000);

  /// The next p samples. Refills first if fewer than p remain unused.
  /// The view stays valid until the next call.
  std::span<const LatticeVector> take(std::size_t p);

  const std::vector<LatticeVector>& samples() const noexcept { return samples_; }
  std::size_t cursor() const noexcept { return cursor_; }
  std::size_t refills() const noexcept { return refills_; }
  double acceptance_rate() const noexcept;
  double alpha() const noexcept { return alpha_; }
  double box() const noexcept { return box_; }

 private:
  void fill();
  LatticeVector propose(double& log_q);
  double log_proposal(const LatticeVector& m) const;

  double alpha_, box_, sd_;
  std::size_t capacity_;
  RngStream rng_;
  LatticeVector current_{1, 0, 0};
  double current_log_ratio_ = 0.0;  // log target - log proposal at current_
  std::vector<LatticeVector> samples_;
  std::size_t cursor_ = 0;
  std::size_t refills_ = 0;
  std::size_t proposed_ = 0;
  std::size_t accepted_ = 0;
};

KSampleBank mh_sample_kvectors(double alpha, double box, std::size_t count, RngStream rng);

/// rho(k) = sum_i q_i exp(i k . r_i), k = 2 pi m / L.
std::complex<double> structure_factor(const PeriodicChargeSystem& sys, const LatticeVector& m);

/// Exact Fourier-space force on every particle, summed over 0 < |m| <= m_cut.
Points fourier_forces_exact(const PeriodicChargeSystem& sys, const EwaldParams& params);
std::array<double, 3> fourier_force_exact(std::size_t i, const PeriodicChargeSystem& sys,
                                          const EwaldParams& params);

/// Random-batch estimate -(S/p) sum_l 4 pi q_i k_l / (V k_l^2) Im(exp(-i k_l.r_i) rho(k_l))
/// using one shared batch of frequencies for all particles.
Points rbe_forces(const PeriodicChargeSystem& sys, std::span<const LatticeVector> batch,
                  double S);
std::array<double, 3> rbe_force(std::size_t i, const PeriodicChargeSystem& sys,
                                std::span<const LatticeVector> batch, double S);

/// Real-space erfc force truncated at r_cut, minimum image, via a cell list.
Points real_space_forces(const PeriodicChargeSystem& sys, const EwaldParams& params);
std::array<double, 3> real_space_force(std::size_t i, const PeriodicChargeSystem& sys,
                                       const EwaldParams& params);

/// Truncated 12-6 Lennard-Jones repulsion between all pairs.
struct LennardJones {
  double epsilon = 1.0;
  double sigma = 0.2;
  double cutoff = 0.5;  // 2.5 sigma
};
Points lennard_jones_forces(const PeriodicChargeSystem& sys, const LennardJones& lj);

struct EwaldEnergy {
  double real = 0.0;     // sum_{i<j, r<r_c} q_i q_j erfc(sqrt(alpha) r) / r
  double fourier = 0.0;  // (2 pi / V) sum_{k != 0} |rho(k)|^2 exp(-k^2/(4 alpha)) / k^2
  double self = 0.0;     // -sqrt(alpha/pi) sum q_i^2

  double u1() const noexcept { return fourier + self; }
  double total() const noexcept { return real + fourier + self; }
};

EwaldEnergy ewald_energy_terms(const PeriodicChargeSystem& sys, const EwaldParams& params);
double ewald_energy(const PeriodicChargeSystem& sys, const EwaldParams& params);

enum class FourierMode { rbe, exact };

struct MdOptions {
  EwaldParams params;
  std::optional<LennardJones> lj;
  Thermostat thermostat;  // monostate, Andersen or Langevin
  double dt = 0.001;
  FourierMode mode = FourierMode::rbe;
};

/// Velocity-Verlet state with cached forces (unit masses).
struct MdState {
  PeriodicChargeSystem system;
  Points forces;
  bool forces_valid = false;
  std::size_t step = 0;
};

struct MdStepInfo {
  std::array<double, 3> momentum_change{0, 0, 0};  // before the thermostat
  std::size_t collisions = 0;
};

/// Total force (real space + Fourier + optional LJ) for the current positions.
/// In RBE mode this consumes p frequencies from the bank.
Points electrolyte_forces(const PeriodicChargeSystem& sys, const MdOptions& opt,
                          KSampleBank* bank, double S);

/// One velocity-Verlet step followed by the thermostat.
void rbe_md_step(MdState& md, const MdOptions& opt, KSampleBank& bank, Streams& rng,
                 MdStepInfo* info = nullptr);

double kinetic_energy(const ParticleState& s);

/// CSV rows: step,particle,x,y,z,vx,vy,vz
void write_trajectory_header(std::ostream& os);
void write_trajectory_rows(std::ostream& os, std::size_t step, const ParticleState& s);
/// CSV rows: step,U_real,U_fourier,U_self,kinetic,T_inst
void write_energy_header(std::ostream& os);
void write_energy_row(std::ostream& os, std::size_t step, const EwaldEnergy& u, double kinetic,
                      std::size_t n);

}  // namespace rbm
