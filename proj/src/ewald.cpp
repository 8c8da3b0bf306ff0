#include "rbm/ewald.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rbm/cell_list.hpp"

namespace rbm {

namespace {

constexpr double pi = std::numbers::pi;
using cplx = std::complex<double>;

int norm2(const LatticeVector& m) { return m[0] * m[0] + m[1] * m[1] + m[2] * m[2]; }

void require_3d(const PeriodicChargeSystem& sys) {
  if (!sys.state.box_length) throw std::invalid_argument("charge system needs a periodic box");
  if (sys.state.dim() != 3) throw std::invalid_argument("charge system must be three-dimensional");
  if (sys.charges.size() != sys.size()) {
    throw std::invalid_argument("charge system: " + std::to_string(sys.charges.size()) +
                                " charges for " + std::to_string(sys.size()) + " particles");
  }
}

}  // namespace

double PeriodicChargeSystem::net_charge() const {
  double q = 0.0;
  for (double c : charges) q += c;
  return q;
}

void PeriodicChargeSystem::validate() const {
  require_3d(*this);
  state.validate();
  const double q = net_charge();
  if (std::abs(q) > 1e-12) {
    throw std::invalid_argument("system is not electroneutral: net charge " + std::to_string(q));
  }
}

double EwaldParams::k_cut(double box) const { return 2.0 * pi * m_cut / box; }

void EwaldParams::validate(double box) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("Ewald alpha must be positive");
  if (!(r_cut > 0.0) || !(r_cut < 0.5 * box)) {
    throw std::invalid_argument("real-space cutoff r_c = " + std::to_string(r_cut) +
                                " must satisfy 0 < r_c < L/2 = " + std::to_string(0.5 * box));
  }
  if (m_cut < 1) throw std::invalid_argument("Fourier cutoff must be at least one lattice shell");
  if (p < 1) throw std::invalid_argument("RBE batch size must be >= 1");
}

EwaldParams EwaldParams::defaults(std::size_t n, double box, std::size_t p) {
  const double rho = static_cast<double>(n) / (box * box * box);
  EwaldParams e;
  e.alpha = std::pow(rho, 2.0 / 3.0);
  e.r_cut = std::min(0.49 * box, 4.0 / std::sqrt(e.alpha));
  e.m_cut = reference_mcut(e.alpha, box);
  e.p = p;
  return e;
}

EwaldParams EwaldParams::with_cutoff(double r_cut, double box, std::size_t p) {
  if (!(r_cut > 0.0) || r_cut >= 0.5 * box) {
    throw std::invalid_argument("real-space cutoff must lie in (0, L/2)");
  }
  EwaldParams e;
  e.alpha = 16.0 / (r_cut * r_cut);
  e.r_cut = r_cut;
  e.m_cut = reference_mcut(e.alpha, box);
  e.p = p;
  return e;
}

double sum_S(double alpha, double box) {
  if (!(alpha > 0.0) || !(box > 0.0)) throw std::invalid_argument("sum_S needs alpha, L > 0");
  const double c = pi * pi / (alpha * box * box);
  // t = H - 1, kept separate so that S = 3t + 3t^2 + t^3 keeps its precision
  // when H is close to one
  double t = 0.0;
  if (c >= 1.0) {
    for (int m = 1;; ++m) {
      const double term = 2.0 * std::exp(-c * m * m);
      t += term;
      if (term < 1e-18 * (1.0 + t)) break;
    }
  } else {
    // Poisson-dual form: H = sqrt(pi/c) (1 + 2 sum exp(-pi^2 m^2 / c))
    const double cd = pi * pi / c;
    double g = 1.0;
    for (int m = 1;; ++m) {
      const double term = 2.0 * std::exp(-cd * m * m);
      g += term;
      if (term < 1e-18 * g) break;
    }
    t = std::sqrt(pi / c) * g - 1.0;
  }
  return t * (3.0 + t * (3.0 + t));
}

int reference_mcut(double alpha, double box, double eps) {
  return static_cast<int>(std::ceil(box * std::sqrt(alpha * std::log(1.0 / eps)) / pi));
}

// ---------------------------------------------------------------------------
// frequency bank

KSampleBank::KSampleBank(double alpha, double box, std::size_t capacity, RngStream rng,
                         std::size_t burn_in)
    : alpha_(alpha),
      box_(box),
      sd_(std::sqrt(alpha) * box / (pi * std::numbers::sqrt2)),
      capacity_(capacity),
      rng_(std::move(rng)) {
  if (!(alpha > 0.0) || !(box > 0.0)) throw std::invalid_argument("k-bank needs alpha, L > 0");
  if (capacity == 0) throw std::invalid_argument("k-bank capacity must be >= 1");
  double lq = 0.0;
  do {
    current_ = propose(lq);
  } while (norm2(current_) == 0);
  current_log_ratio_ = -norm2(current_) / (2.0 * sd_ * sd_) - lq;
  for (std::size_t k = 0; k < burn_in; ++k) {
    const LatticeVector m = propose(lq);
    ++proposed_;
    if (norm2(m) == 0) continue;
    const double ratio = -norm2(m) / (2.0 * sd_ * sd_) - lq;
    if (std::log(rng_.uniform()) < ratio - current_log_ratio_) {
      current_ = m;
      current_log_ratio_ = ratio;
      ++accepted_;
    }
  }
  fill();
}

double KSampleBank::log_proposal(const LatticeVector& m) const {
  double lq = 0.0;
  const double s = sd_ * std::numbers::sqrt2;
  for (int c : m) {
    const double a = std::abs(c);
    lq += std::log(0.5 * (std::erfc((a - 0.5) / s) - std::erfc((a + 0.5) / s)));
  }
  return lq;
}

LatticeVector KSampleBank::propose(double& log_q) {
  LatticeVector m;
  for (int& c : m) c = static_cast<int>(std::lround(sd_ * rng_.normal()));
  log_q = log_proposal(m);
  return m;
}

void KSampleBank::fill() {
  samples_.clear();
  samples_.reserve(capacity_);
  double lq = 0.0;
  while (samples_.size() < capacity_) {
    const LatticeVector m = propose(lq);
    ++proposed_;
    if (norm2(m) != 0) {
      const double ratio = -norm2(m) / (2.0 * sd_ * sd_) - lq;
      if (std::log(rng_.uniform()) < ratio - current_log_ratio_) {
        current_ = m;
        current_log_ratio_ = ratio;
        ++accepted_;
      }
    }
    samples_.push_back(current_);
  }
  cursor_ = 0;
}

std::span<const LatticeVector> KSampleBank::take(std::size_t p) {
  if (p > capacity_) {
    throw std::invalid_argument("requested " + std::to_string(p) +
                                " frequencies from a bank of capacity " +
                                std::to_string(capacity_));
  }
  if (cursor_ + p > samples_.size()) {
    fill();
    ++refills_;
  }
  std::span<const LatticeVector> out(samples_.data() + cursor_, p);
  cursor_ += p;
  return out;
}

double KSampleBank::acceptance_rate() const noexcept {
  return proposed_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposed_);
}

KSampleBank mh_sample_kvectors(double alpha, double box, std::size_t count, RngStream rng) {
  return KSampleBank(alpha, box, count, std::move(rng));
}

// ---------------------------------------------------------------------------
// Fourier space

cplx structure_factor(const PeriodicChargeSystem& sys, const LatticeVector& m) {
  require_3d(sys);
  const double w = 2.0 * pi / sys.box();
  cplx rho = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto r = sys.state.positions[i];
    const double phase = w * (m[0] * r[0] + m[1] * r[1] + m[2] * r[2]);
    rho += sys.charges[i] * cplx(std::cos(phase), std::sin(phase));
  }
  return rho;
}

namespace {

// Shared half-space enumeration for the exact force and energy. Each k in the
// half space stands for the pair (k, -k), which contribute equally.
void fourier_exact(const PeriodicChargeSystem& sys, const EwaldParams& params, Points* forces,
                   double* energy) {
  require_3d(sys);
  const std::size_t n = sys.size();
  const int mc = params.m_cut;
  const std::size_t width = 2 * static_cast<std::size_t>(mc) + 1;
  const double L = sys.box(), V = sys.volume(), w = 2.0 * pi / L;

  // tables[c][(m + mc) * n + i] = exp(i w m x_ic)
  std::array<std::vector<cplx>, 3> tables;
  for (int c = 0; c < 3; ++c) {
    auto& t = tables[c];
    t.assign(width * n, cplx(1.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      const double th = w * sys.state.positions[i][c];
      const cplx base(std::cos(th), std::sin(th));
      cplx up(1.0, 0.0);
      for (int m = 1; m <= mc; ++m) {
        up *= base;
        t[(mc + m) * n + i] = up;
        t[(mc - m) * n + i] = std::conj(up);
      }
    }
  }

  if (forces) *forces = Points(n, 3);
  double u = 0.0;
  std::vector<cplx> exy(n), e(n);
  const int mc2 = mc * mc;
  for (int mx = 0; mx <= mc; ++mx) {
    for (int my = (mx == 0 ? 0 : -mc); my <= mc; ++my) {
      if (mx * mx + my * my > mc2) continue;
      const cplx* tx = &tables[0][(mc + mx) * n];
      const cplx* ty = &tables[1][(mc + my) * n];
      for (std::size_t i = 0; i < n; ++i) exy[i] = tx[i] * ty[i];
      const int mz0 = (mx == 0 && my == 0) ? 1 : -mc;
      for (int mz = mz0; mz <= mc; ++mz) {
        const int m2 = mx * mx + my * my + mz * mz;
        if (m2 > mc2) continue;
        const cplx* tz = &tables[2][(mc + mz) * n];
        cplx rho = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          e[i] = exy[i] * tz[i];
          rho += sys.charges[i] * e[i];
        }
        const double k2 = w * w * m2;
        const double g = std::exp(-k2 / (4.0 * params.alpha)) / k2;
        u += 2.0 * g * std::norm(rho);
        if (forces) {
          const double pref = -2.0 * 4.0 * pi * g / V;
          const double kx = w * mx, ky = w * my, kz = w * mz;
          for (std::size_t i = 0; i < n; ++i) {
            // Im(conj(e_i) rho)
            const double im = e[i].real() * rho.imag() - e[i].imag() * rho.real();
            const double s = pref * sys.charges[i] * im;
            auto f = (*forces)[i];
            f[0] += s * kx;
            f[1] += s * ky;
            f[2] += s * kz;
          }
        }
      }
    }
  }
  if (energy) *energy = 2.0 * pi / V * u;
}

}  // namespace

Points fourier_forces_exact(const PeriodicChargeSystem& sys, const EwaldParams& params) {
  Points f;
  fourier_exact(sys, params, &f, nullptr);
  return f;
}

std::array<double, 3> fourier_force_exact(std::size_t i, const PeriodicChargeSystem& sys,
                                          const EwaldParams& params) {
  const Points f = fourier_forces_exact(sys, params);
  return {f[i][0], f[i][1], f[i][2]};
}

Points rbe_forces(const PeriodicChargeSystem& sys, std::span<const LatticeVector> batch,
                  double S) {
  require_3d(sys);
  const std::size_t n = sys.size();
  Points f(n, 3);
  if (batch.empty()) return f;
  const double V = sys.volume(), w = 2.0 * pi / sys.box();
  const double scale = S / static_cast<double>(batch.size());
  std::vector<cplx> e(n);
  for (const LatticeVector& m : batch) {
    const int m2 = norm2(m);
    if (m2 == 0) throw std::invalid_argument("RBE batch contains the zero frequency");
    const double kx = w * m[0], ky = w * m[1], kz = w * m[2];
    cplx rho = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = sys.state.positions[i];
      const double phase = kx * r[0] + ky * r[1] + kz * r[2];
      e[i] = cplx(std::cos(phase), std::sin(phase));
      rho += sys.charges[i] * e[i];
    }
    const double pref = -scale * 4.0 * pi / (V * w * w * m2);
    for (std::size_t i = 0; i < n; ++i) {
      const double im = e[i].real() * rho.imag() - e[i].imag() * rho.real();
      const double s = pref * sys.charges[i] * im;
      auto fi = f[i];
      fi[0] += s * kx;
      fi[1] += s * ky;
      fi[2] += s * kz;
    }
  }
  return f;
}

std::array<double, 3> rbe_force(std::size_t i, const PeriodicChargeSystem& sys,
                                std::span<const LatticeVector> batch, double S) {
  const Points f = rbe_forces(sys, batch, S);
  return {f[i][0], f[i][1], f[i][2]};
}

// ---------------------------------------------------------------------------
// real space

namespace {

// Calls f(i, j, dx, r2) once per unordered pair (i < j) with dx = r_i - r_j.
template <class F>
void for_each_real_pair(const PeriodicChargeSystem& sys, double r_cut, F&& f) {
  require_3d(sys);
  CellList cells(sys.state.positions, sys.box(), r_cut);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    cells.for_each_neighbor(i, [&](std::size_t j, std::span<const double> dx, double r2) {
      if (j > i) f(i, j, dx, r2);
    });
  }
}

}  // namespace

Points real_space_forces(const PeriodicChargeSystem& sys, const EwaldParams& params) {
  params.validate(sys.box());
  Points f(sys.size(), 3);
  const double sa = std::sqrt(params.alpha);
  const double c = 2.0 * std::sqrt(params.alpha / pi);
  for_each_real_pair(sys, params.r_cut,
                     [&](std::size_t i, std::size_t j, std::span<const double> dx, double r2) {
                       const double r = std::sqrt(r2);
                       const double mag = sys.charges[i] * sys.charges[j] *
                                          (std::erfc(sa * r) / r2 +
                                           c * std::exp(-params.alpha * r2) / r);
                       auto fi = f[i];
                       auto fj = f[j];
                       for (int k = 0; k < 3; ++k) {
                         fi[k] += mag * dx[k] / r;
                         fj[k] -= mag * dx[k] / r;
                       }
                     });
  return f;
}

std::array<double, 3> real_space_force(std::size_t i, const PeriodicChargeSystem& sys,
                                       const EwaldParams& params) {
  const Points f = real_space_forces(sys, params);
  return {f[i][0], f[i][1], f[i][2]};
}

Points lennard_jones_forces(const PeriodicChargeSystem& sys, const LennardJones& lj) {
  Points f(sys.size(), 3);
  const double s2 = lj.sigma * lj.sigma;
  for_each_real_pair(sys, lj.cutoff,
                     [&](std::size_t i, std::size_t j, std::span<const double> dx, double r2) {
                       const double sr6 = (s2 / r2) * (s2 / r2) * (s2 / r2);
                       // (24 eps / r^2)(2 (s/r)^12 - (s/r)^6) dx
                       const double mag = 24.0 * lj.epsilon * (2.0 * sr6 * sr6 - sr6) / r2;
                       auto fi = f[i];
                       auto fj = f[j];
                       for (int k = 0; k < 3; ++k) {
                         fi[k] += mag * dx[k];
                         fj[k] -= mag * dx[k];
                       }
                     });
  return f;
}

EwaldEnergy ewald_energy_terms(const PeriodicChargeSystem& sys, const EwaldParams& params) {
  params.validate(sys.box());
  EwaldEnergy u;
  fourier_exact(sys, params, nullptr, &u.fourier);
  double q2 = 0.0;
  for (double q : sys.charges) q2 += q * q;
  u.self = -std::sqrt(params.alpha / pi) * q2;
  const double sa = std::sqrt(params.alpha);
  double real = 0.0;
  for_each_real_pair(sys, params.r_cut,
                     [&](std::size_t i, std::size_t j, std::span<const double>, double r2) {
                       const double r = std::sqrt(r2);
                       real += sys.charges[i] * sys.charges[j] * std::erfc(sa * r) / r;
                     });
  u.real = real;
  return u;
}

double ewald_energy(const PeriodicChargeSystem& sys, const EwaldParams& params) {
  return ewald_energy_terms(sys, params).total();
}

// ---------------------------------------------------------------------------
// molecular dynamics

Points electrolyte_forces(const PeriodicChargeSystem& sys, const MdOptions& opt,
                          KSampleBank* bank, double S) {
  Points f = real_space_forces(sys, opt.params);
  Points fk;
  if (opt.mode == FourierMode::exact) {
    fk = fourier_forces_exact(sys, opt.params);
  } else {
    if (!bank) throw std::invalid_argument("RBE forces need a frequency bank");
    fk = rbe_forces(sys, bank->take(opt.params.p), S);
  }
  for (std::size_t k = 0; k < f.flat().size(); ++k) f.flat()[k] += fk.flat()[k];
  if (opt.lj) {
    const Points fl = lennard_jones_forces(sys, *opt.lj);
    for (std::size_t k = 0; k < f.flat().size(); ++k) f.flat()[k] += fl.flat()[k];
  }
  return f;
}

double kinetic_energy(const ParticleState& s) {
  if (!s.velocities) return 0.0;
  double k = 0.0;
  for (double v : s.velocities->flat()) k += v * v;
  return 0.5 * k;
}

void rbe_md_step(MdState& md, const MdOptions& opt, KSampleBank& bank, Streams& rng,
                 MdStepInfo* info) {
  auto& sys = md.system;
  if (!sys.state.velocities) throw std::invalid_argument("MD needs velocities");
  if (!(opt.dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (std::holds_alternative<thermostat::NoseHoover>(opt.thermostat)) {
    throw std::invalid_argument("electrolyte MD supports the Andersen and Langevin thermostats");
  }
  validate_thermostat(opt.thermostat);
  const double S = sum_S(opt.params.alpha, sys.box());
  if (!md.forces_valid) {
    md.forces = electrolyte_forces(sys, opt, &bank, S);
    md.forces_valid = true;
  }
  const double dt = opt.dt, h = 0.5 * dt;
  auto& v = sys.state.velocities->flat();
  auto& x = sys.state.positions.flat();
  std::array<double, 3> p0{0, 0, 0};
  for (std::size_t k = 0; k < v.size(); ++k) p0[k % 3] += v[k];
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] += h * md.forces.flat()[k];
    x[k] += dt * v[k];
  }
  sys.state.wrap();
  md.forces = electrolyte_forces(sys, opt, &bank, S);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += h * md.forces.flat()[k];
  if (info) {
    std::array<double, 3> p1{0, 0, 0};
    for (std::size_t k = 0; k < v.size(); ++k) p1[k % 3] += v[k];
    for (int c = 0; c < 3; ++c) info->momentum_change[c] = p1[c] - p0[c];
  }

  if (const auto* a = std::get_if<thermostat::Andersen>(&opt.thermostat)) {
    std::size_t hits = 0;
    sys.state = apply_andersen(sys.state, a->nu, a->temperature, dt, rng.thermostat, &hits);
    if (info) info->collisions = hits;
  } else if (const auto* l = std::get_if<thermostat::Langevin>(&opt.thermostat)) {
    const double decay = std::exp(-l->gamma * dt);
    const double sd = std::sqrt((1.0 - decay * decay) / l->beta);
    for (double& u : sys.state.velocities->flat()) u = decay * u + sd * rng.thermostat.normal();
  }
  sys.state.time += dt;
  ++md.step;
  sys.state.require_finite("rbe_md_step");
}

// ---------------------------------------------------------------------------
// output

void write_trajectory_header(std::ostream& os) { os << "step,particle,x,y,z,vx,vy,vz\n"; }

void write_trajectory_rows(std::ostream& os, std::size_t step, const ParticleState& s) {
  const std::size_t d = s.dim();
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << step << ',' << i;
    for (std::size_t c = 0; c < 3; ++c) os << ',' << (c < d ? s.positions[i][c] : 0.0);
    for (std::size_t c = 0; c < 3; ++c) {
      os << ',' << (s.velocities && c < d ? (*s.velocities)[i][c] : 0.0);
    }
    os << '\n';
  }
}

void write_energy_header(std::ostream& os) {
  os << "step,U_real,U_fourier,U_self,kinetic,T_inst\n";
}

void write_energy_row(std::ostream& os, std::size_t step, const EwaldEnergy& u, double kinetic,
                      std::size_t n) {
  const double t = n == 0 ? 0.0 : 2.0 * kinetic / (3.0 * static_cast<double>(n));
  os << step << ',' << u.real << ',' << u.fourier << ',' << u.self << ',' << kinetic << ',' << t
     << '\n';
}

}  // namespace rbm
