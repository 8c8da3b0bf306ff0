#include "rbm/integrators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rbm/cell_list.hpp"
#include "rbm/forces.hpp"

namespace rbm {

void FirstOrderSystem::validate() const {
  if (!kernel.force) throw std::invalid_argument("first-order system: kernel has no force");
  if (!(sigma >= 0.0)) throw std::invalid_argument("first-order system: sigma must be >= 0");
}

double SecondOrderSystem::fd_sigma(double gamma, double beta) {
  return std::sqrt(2.0 * gamma / beta);
}

void SecondOrderSystem::validate(std::size_t n) const {
  if (!kernel.force) throw std::invalid_argument("second-order system: kernel has no force");
  if (!(gamma >= 0.0)) throw std::invalid_argument("second-order system: gamma must be >= 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("second-order system: sigma must be >= 0");
  if (!masses.empty()) {
    if (masses.size() != n) throw std::invalid_argument("second-order system: masses length");
    for (double m : masses) {
      if (!(m > 0.0)) throw std::invalid_argument("second-order system: masses must be > 0");
    }
  }
  if (fluctuation_dissipation_beta) {
    const double want = fd_sigma(gamma, *fluctuation_dissipation_beta);
    if (std::abs(sigma - want) > 1e-12) {
      throw std::invalid_argument("second-order system: sigma violates sigma = sqrt(2 gamma/beta)");
    }
  }
}

void validate_thermostat(const Thermostat& t) {
  struct Visitor {
    void operator()(std::monostate) const {}
    void operator()(const thermostat::Andersen& a) const {
      if (!(a.nu > 0.0) || !(a.temperature > 0.0)) {
        throw std::invalid_argument("Andersen thermostat needs nu > 0 and T > 0");
      }
    }
    void operator()(const thermostat::Langevin& l) const {
      if (!(l.gamma > 0.0) || !(l.beta > 0.0)) {
        throw std::invalid_argument("Langevin thermostat needs gamma > 0 and beta > 0");
      }
    }
    void operator()(const thermostat::NoseHoover& nh) const {
      if (!(nh.q > 0.0) || !(nh.beta > 0.0)) {
        throw std::invalid_argument("Nose-Hoover thermostat needs Q > 0 and beta > 0");
      }
    }
  };
  std::visit(Visitor{}, t);
}

StepSchedule StepSchedule::constant(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  return {Kind::constant, dt, 0.0};
}

StepSchedule StepSchedule::log_decay(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("log-decay constant must be positive");
  return {Kind::log_decay, c, 0.0};
}

StepSchedule StepSchedule::inverse(double k0, double scale) {
  if (!(k0 >= 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument("inverse schedule needs k0 >= 0 and scale > 0");
  }
  return {Kind::inverse, scale, k0};
}

double StepSchedule::at(std::size_t k) const {
  if (k == 0) throw std::invalid_argument("schedules are indexed from k = 1");
  const double kk = static_cast<double>(k);
  switch (kind_) {
    case Kind::constant:
      return a_;
    case Kind::log_decay:
      return a_ / std::log(kk + 1.0);
    case Kind::inverse:
      return a_ / (kk + b_);
  }
  return a_;
}

namespace {

void check_dt(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
}

Points draw_noise(RngStream& rng, std::size_t n, std::size_t d) {
  Points z(n, d);
  for (double& v : z.flat()) v = rng.normal();
  return z;
}

// acc_i = scale * sum_{j in members, j != i} part(r_i - r_j), members ascending.
void member_sum(PairForce& pf, std::size_t i, std::span<const std::size_t> members,
                double scale, std::span<double> acc) {
  for (double& v : acc) v = 0.0;
  for (std::size_t j : members) {
    if (j != i) pf.accumulate(i, j, acc);
  }
  for (double& v : acc) v *= scale;
}

// Euler-Maruyama update of particle i in place given its interaction force.
void advance_first(const ParticleState& from, ParticleState& to, std::size_t i,
                   const FirstOrderSystem& sys, std::span<const double> interaction,
                   std::span<const double> z, double dt, std::vector<double>& scratch) {
  const auto x = from.positions[i];
  auto y = to.positions[i];
  const std::size_t d = x.size();
  const double sdt = std::sqrt(dt);
  if (sys.drift) {
    sys.drift(x, scratch);
  } else {
    for (double& v : scratch) v = 0.0;
  }
  for (std::size_t c = 0; c < d; ++c) y[c] = x[c] + (scratch[c] + interaction[c]) * dt;
  if (sys.diffusion) {
    sys.diffusion(x, scratch);
    for (std::size_t c = 0; c < d; ++c) y[c] += scratch[c] * sdt * z[c];
  } else if (sys.sigma != 0.0) {
    for (std::size_t c = 0; c < d; ++c) y[c] += sys.sigma * sdt * z[c];
  }
}

void advance_second(const ParticleState& from, ParticleState& to, std::size_t i,
                    const SecondOrderSystem& sys, std::span<const double> interaction,
                    std::span<const double> z, double dt, std::vector<double>& scratch) {
  const auto x = from.positions[i];
  const auto v = (*from.velocities)[i];
  auto xo = to.positions[i];
  auto vo = (*to.velocities)[i];
  const std::size_t d = x.size();
  const double m = sys.mass(i);
  const double noise = sys.sigma * std::sqrt(dt) / std::sqrt(m);
  if (sys.drift) {
    sys.drift(x, scratch);
  } else {
    for (double& s : scratch) s = 0.0;
  }
  for (std::size_t c = 0; c < d; ++c) {
    xo[c] = x[c] + v[c] * dt;
    vo[c] = v[c] + ((scratch[c] + interaction[c]) / m - sys.gamma * v[c]) * dt + noise * z[c];
  }
}

void require_velocities(const ParticleState& s) {
  if (!s.velocities) throw std::invalid_argument("second-order step needs velocities");
}

void finish(ParticleState& out, double dt, const char* who) {
  out.time += dt;
  out.wrap();
  out.require_finite(who);
}

double batch_scale(double alpha, std::size_t n, std::size_t members) {
  return alpha * (static_cast<double>(n - 1) / static_cast<double>(members - 1));
}

}  // namespace

Points interaction_forces(const ParticleState& s, const KernelSpec& kernel, double alpha_n,
                          StepStats* stats) {
  const std::size_t n = s.size(), d = s.dim();
  Points f(n, d);
  if (alpha_n == 0.0) return f;
  PairForce pf(kernel, s);
  for (std::size_t i = 0; i < n; ++i) {
    auto acc = f[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) pf.accumulate(i, j, acc);
    }
    for (double& v : acc) v *= alpha_n;
  }
  if (stats) stats->clamps += pf.clamps();
  return f;
}

ParticleState direct_step(const ParticleState& s, const FirstOrderSystem& sys, double dt,
                          Streams& rng, StepStats* stats) {
  check_dt(dt);
  const std::size_t n = s.size(), d = s.dim();
  const Points z = draw_noise(rng.noise, n, d);
  const Points f = interaction_forces(s, sys.kernel, sys.alpha_n, stats);
  ParticleState out = s;
  std::vector<double> scratch(d);
  for (std::size_t i = 0; i < n; ++i) advance_first(s, out, i, sys, f[i], z[i], dt, scratch);
  finish(out, dt, "direct_step");
  return out;
}

ParticleState direct_step(const ParticleState& s, const SecondOrderSystem& sys, double dt,
                          Streams& rng, StepStats* stats) {
  check_dt(dt);
  require_velocities(s);
  const std::size_t n = s.size(), d = s.dim();
  const Points z = draw_noise(rng.noise, n, d);
  const Points f = interaction_forces(s, sys.kernel, sys.alpha_n, stats);
  ParticleState out = s;
  std::vector<double> scratch(d);
  for (std::size_t i = 0; i < n; ++i) advance_second(s, out, i, sys, f[i], z[i], dt, scratch);
  finish(out, dt, "direct_step");
  return out;
}

namespace {

template <class System, class Advance>
ParticleState rbm_step_impl(const ParticleState& s, const System& sys, std::size_t p, double dt,
                            Streams& rng, StepStats* stats, Advance advance, const char* who) {
  check_dt(dt);
  const std::size_t n = s.size(), d = s.dim();
  const BatchDivision div = random_division(n, p, rng.division);
  const Points z = draw_noise(rng.noise, n, d);
  ParticleState out = s;
  PairForce pf(sys.kernel, s);
  std::vector<double> acc(d), scratch(d);
  for (const auto& batch : div.batches) {
    const double scale = batch_scale(sys.alpha_n, n, batch.size());
    for (std::size_t i : batch) {
      member_sum(pf, i, batch, scale, acc);
      advance(s, out, i, sys, acc, z[i], dt, scratch);
    }
  }
  if (stats) stats->clamps += pf.clamps();
  finish(out, dt, who);
  return out;
}

template <class System, class Advance>
ParticleState rbmr_impl(const ParticleState& s, const System& sys, std::size_t p, double dt,
                        Streams& rng, StepStats* stats, Advance advance) {
  check_dt(dt);
  const std::size_t n = s.size(), d = s.dim();
  if (p < 2 || p > n) throw std::invalid_argument("batch size must satisfy 2 <= p <= N");
  const std::size_t loops = (n + p - 1) / p;
  ParticleState cur = s;
  std::vector<double> acc(d), scratch(d);
  if (stats && stats->updates_per_particle.size() != n) stats->updates_per_particle.assign(n, 0);
  const double scale = batch_scale(sys.alpha_n, n, p);
  for (std::size_t k = 0; k < loops; ++k) {
    const auto members = sample_batch_with_replacement(n, p, rng.division);
    const Points z = draw_noise(rng.noise, members.size(), d);
    ParticleState next = cur;
    PairForce pf(sys.kernel, cur);
    for (std::size_t a = 0; a < members.size(); ++a) {
      const std::size_t i = members[a];
      member_sum(pf, i, members, scale, acc);
      advance(cur, next, i, sys, acc, z[a], dt, scratch);
      if (stats) ++stats->updates_per_particle[i];
    }
    if (stats) {
      stats->clamps += pf.clamps();
      ++stats->inner_updates;
    }
    next.wrap();
    cur = std::move(next);
  }
  cur.time = s.time + dt;
  cur.require_finite("rbmr_step");
  return cur;
}

}  // namespace

ParticleState rbm_step_first_order(const ParticleState& s, const FirstOrderSystem& sys,
                                   std::size_t p, double dt, Streams& rng, StepStats* stats) {
  return rbm_step_impl(s, sys, p, dt, rng, stats, advance_first, "rbm_step_first_order");
}

ParticleState rbm_step_second_order(const ParticleState& s, const SecondOrderSystem& sys,
                                    std::size_t p, double dt, Streams& rng, StepStats* stats) {
  require_velocities(s);
  return rbm_step_impl(s, sys, p, dt, rng, stats, advance_second, "rbm_step_second_order");
}

ParticleState rbmr_step(const ParticleState& s, const FirstOrderSystem& sys, std::size_t p,
                        double dt, Streams& rng, StepStats* stats) {
  return rbmr_impl(s, sys, p, dt, rng, stats, advance_first);
}

ParticleState rbmr_step(const ParticleState& s, const SecondOrderSystem& sys, std::size_t p,
                        double dt, Streams& rng, StepStats* stats) {
  require_velocities(s);
  return rbmr_impl(s, sys, p, dt, rng, stats, advance_second);
}

ParticleState rbm_split_step(const ParticleState& s, const SecondOrderSystem& sys,
                             std::size_t p, double dt, Streams& rng, StepStats* stats) {
  check_dt(dt);
  require_velocities(s);
  if (!sys.kernel.has_split() || !sys.kernel.short_part || !sys.kernel.smooth_part) {
    throw std::invalid_argument("rbm_split_step needs a kernel with a K1/K2 split");
  }
  if (!s.box_length) throw std::invalid_argument("rbm_split_step needs a periodic box");
  const std::size_t n = s.size(), d = s.dim();
  const double r0 = *sys.kernel.split_radius;

  const BatchDivision div = random_division(n, p, rng.division);
  const Points z = draw_noise(rng.noise, n, d);

  // exact short-range part
  Points f(n, d);
  CellList cells(s.positions, *s.box_length, r0);
  PairForce short_pf(sys.kernel, s, KernelPart::short_range);
  for (std::size_t i = 0; i < n; ++i) {
    auto acc = f[i];
    cells.for_each_neighbor(i, [&](std::size_t, std::span<const double> dx, double) {
      short_pf.accumulate_displacement(dx, acc);
    });
    for (double& v : acc) v *= sys.alpha_n;
  }

  ParticleState out = s;
  PairForce smooth_pf(sys.kernel, s, KernelPart::smooth);
  std::vector<double> acc(d), scratch(d);
  for (const auto& batch : div.batches) {
    const double scale = batch_scale(sys.alpha_n, n, batch.size());
    for (std::size_t i : batch) {
      member_sum(smooth_pf, i, batch, scale, acc);
      for (std::size_t c = 0; c < d; ++c) acc[c] += f[i][c];
      advance_second(s, out, i, sys, acc, z[i], dt, scratch);
    }
  }
  if (stats) stats->clamps += short_pf.clamps();
  finish(out, dt, "rbm_split_step");
  return out;
}

ParticleState apply_andersen(const ParticleState& s, double nu, double temperature, double dt,
                             RngStream& rng, std::size_t* collisions) {
  require_velocities(s);
  if (nu < 0.0 || !(temperature > 0.0)) {
    throw std::invalid_argument("Andersen thermostat needs nu >= 0 and T > 0");
  }
  ParticleState out = s;
  const double prob = -std::expm1(-nu * dt);
  const double sd = std::sqrt(temperature);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (rng.uniform() < prob) {
      ++hits;
      for (double& v : (*out.velocities)[i]) v = sd * rng.normal();
    }
  }
  if (collisions) *collisions += hits;
  return out;
}

NoseHooverResult nose_hoover_step(const ParticleState& s, double xi, double q, double beta,
                                  double dt, const Points& forces,
                                  const std::vector<double>& masses) {
  require_velocities(s);
  if (!(q > 0.0) || !(beta > 0.0)) throw std::invalid_argument("Nose-Hoover needs Q, beta > 0");
  if (forces.size() != s.size() || forces.dim() != s.dim()) {
    throw std::invalid_argument("Nose-Hoover: force array shape mismatch");
  }
  if (!masses.empty() && masses.size() != s.size()) {
    throw std::invalid_argument("Nose-Hoover: masses length mismatch");
  }
  const std::size_t n = s.size(), d = s.dim();
  ParticleState out = s;
  double twice_kinetic = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = masses.empty() ? 1.0 : masses[i];
    const auto x = s.positions[i];
    const auto v = (*s.velocities)[i];
    auto xo = out.positions[i];
    auto vo = (*out.velocities)[i];
    for (std::size_t c = 0; c < d; ++c) {
      twice_kinetic += m * v[c] * v[c];
      xo[c] = x[c] + v[c] * dt;
      vo[c] = v[c] + (forces[i][c] / m - xi * v[c]) * dt;
    }
  }
  const double target = static_cast<double>(d * n) / beta;
  const double xi_next = xi + dt * (twice_kinetic - target) / q;
  out.time += dt;
  out.wrap();
  out.require_finite("nose_hoover_step");
  return {std::move(out), xi_next};
}

}  // namespace rbm
