#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "rbm/batching.hpp"
#include "rbm/kernel.hpp"
#include "rbm/rng.hpp"
#include "rbm/state.hpp"

namespace rbm {

/// dr_i = b(r_i) dt + alpha_N sum_j K(r_i - r_j) dt + noise.
/// Noise is sigma dW, or diag(g(r_i)) dW when `diffusion` is set (Ito).
struct FirstOrderSystem {
  VectorField drift;  // empty => b = 0
  KernelSpec kernel;
  double alpha_n = 1.0;
  double sigma = 0.0;
  VectorField diffusion;

  void validate() const;
};

/// dr = v dt, dv = [(b + alpha_N sum K)/m - gamma v] dt + sigma/sqrt(m) dW.
/// With unit masses this is the underdamped Langevin system.
struct SecondOrderSystem {
  VectorField drift;
  KernelSpec kernel;
  double alpha_n = 1.0;
  double gamma = 0.0;
  double sigma = 0.0;
  std::vector<double> masses;  // empty => all ones
  /// When set, sigma must equal sqrt(2 gamma / beta).
  std::optional<double> fluctuation_dissipation_beta;

  double mass(std::size_t i) const { return masses.empty() ? 1.0 : masses[i]; }
  void validate(std::size_t n) const;

  static double fd_sigma(double gamma, double beta);
};

namespace thermostat {
struct Andersen {
  double nu;           // collision frequency
  double temperature;  // T
};
struct Langevin {
  double gamma;
  double beta;
};
struct NoseHoover {
  double q;     // thermal mass
  double beta;
  double xi = 0.0;
};
}  // namespace thermostat

using Thermostat =
    std::variant<std::monostate, thermostat::Andersen, thermostat::Langevin, thermostat::NoseHoover>;

void validate_thermostat(const Thermostat& t);

/// Time-step sequences indexed from k = 1.
class StepSchedule {
 public:
  static StepSchedule constant(double dt);
  /// dt_k = c / log(k + 1)
  static StepSchedule log_decay(double c);
  /// dt_k = scale / (k + k0)
  static StepSchedule inverse(double k0, double scale = 1.0);

  double at(std::size_t k) const;
  bool decaying() const noexcept { return kind_ != Kind::constant; }

 private:
  enum class Kind { constant, log_decay, inverse };
  StepSchedule(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

struct StepStats {
  std::size_t clamps = 0;         // singular kernel evaluations regularised
  std::size_t inner_updates = 0;  // RBM-r inner iterations
  std::vector<std::size_t> updates_per_particle;  // RBM-r only
};

// Full-batch Euler-Maruyama reference steps.
ParticleState direct_step(const ParticleState& s, const FirstOrderSystem& sys, double dt,
                          Streams& rng, StepStats* stats = nullptr);
ParticleState direct_step(const ParticleState& s, const SecondOrderSystem& sys, double dt,
                          Streams& rng, StepStats* stats = nullptr);

/// One random division, then an Euler-Maruyama substep per particle using only
/// its batch mates (prefactor alpha_N (N-1)/(p-1)).
ParticleState rbm_step_first_order(const ParticleState& s, const FirstOrderSystem& sys,
                                   std::size_t p, double dt, Streams& rng,
                                   StepStats* stats = nullptr);
ParticleState rbm_step_second_order(const ParticleState& s, const SecondOrderSystem& sys,
                                    std::size_t p, double dt, Streams& rng,
                                    StepStats* stats = nullptr);

/// ceil(N/p) sequential inner updates; each draws a fresh p-subset and advances
/// only its members by dt, writing back before the next draw.
ParticleState rbmr_step(const ParticleState& s, const FirstOrderSystem& sys, std::size_t p,
                        double dt, Streams& rng, StepStats* stats = nullptr);
ParticleState rbmr_step(const ParticleState& s, const SecondOrderSystem& sys, std::size_t p,
                        double dt, Streams& rng, StepStats* stats = nullptr);

/// Short-range K1 summed exactly through a cell list, smooth K2 by random
/// batches. Needs a split kernel and a periodic box.
ParticleState rbm_split_step(const ParticleState& s, const SecondOrderSystem& sys,
                             std::size_t p, double dt, Streams& rng,
                             StepStats* stats = nullptr);

/// Each particle independently redraws v ~ N(0, T I) with probability
/// 1 - exp(-nu dt).
ParticleState apply_andersen(const ParticleState& s, double nu, double temperature, double dt,
                             RngStream& rng, std::size_t* collisions = nullptr);

struct NoseHooverResult {
  ParticleState state;
  double xi;
};

/// Explicit Euler step of the real-variable Nose-Hoover equations:
///   r' = v, v' = F/m - xi v, xi' = (sum m|v|^2 - dN/beta) / Q.
NoseHooverResult nose_hoover_step(const ParticleState& s, double xi, double q, double beta,
                                  double dt, const Points& forces,
                                  const std::vector<double>& masses = {});

/// Interaction forces alpha_N sum_j K(r_i - r_j) for all i (full batch).
Points interaction_forces(const ParticleState& s, const KernelSpec& kernel, double alpha_n,
                          StepStats* stats = nullptr);

}  // namespace rbm
