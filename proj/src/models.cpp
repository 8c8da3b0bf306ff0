#include "rbm/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace rbm {

namespace {

constexpr double pi = std::numbers::pi;

double dist(std::span<const double> a, std::span<const double> b) {
  double r2 = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) r2 += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(r2);
}

}  // namespace

// --- Dyson -----------------------------------------------------------------

double semicircle_density(double x) {
  const double s = 2.0 - x * x;
  return s > 0.0 ? std::sqrt(s) / pi : 0.0;
}

double semicircle_cdf(double x) {
  const double r = std::numbers::sqrt2;
  if (x <= -r) return 0.0;
  if (x >= r) return 1.0;
  return 0.5 + x * std::sqrt(2.0 - x * x) / (2.0 * pi) + std::asin(x / r) / pi;
}

void DysonModel::validate() const {
  if (n < 2) throw std::invalid_argument("Dyson model needs N >= 2");
  if (!(split > 0.0)) throw std::invalid_argument("Dyson split radius must be positive");
}

FirstOrderSystem DysonModel::sde() const {
  validate();
  FirstOrderSystem sys;
  sys.drift = [](std::span<const double> x, std::span<double> out) { out[0] = -x[0]; };
  sys.kernel = kernels::inverse_1d();
  sys.alpha_n = 1.0 / static_cast<double>(n - 1);
  sys.sigma = 1.0 / std::sqrt(static_cast<double>(n - 1));
  return sys;
}

GibbsTarget DysonModel::gibbs_target() const {
  validate();
  GibbsTarget t;
  t.n = n;
  t.dim = 1;
  t.beta = 1.0;
  t.w = 1.0;
  const double c = static_cast<double>(n - 1);
  t.potential = [c](std::span<const double> x) { return 0.5 * c * x[0] * x[0]; };
  t.grad_potential = [c](std::span<const double> x, std::span<double> out) { out[0] = c * x[0]; };
  const double r0 = split;
  t.phi1 = [r0](double r) { return phi1(r, r0); };
  t.phi1_derivative = [r0](double r) { return phi1_derivative(r, r0); };
  t.phi2 = [r0](double r) { return phi2(r, r0); };
  t.phi2_range = r0;
  return t;
}

Points DysonModel::initial(RngStream& rng) const {
  Points x(n, 1);
  for (double& v : x.flat()) v = std::sqrt(0.5) * rng.normal();
  return x;
}

double DysonModel::phi1(double r, double r0) {
  if (r >= r0) return -std::log(r);
  return -std::log(r0) + 0.5 * (1.0 - r * r / (r0 * r0));
}

double DysonModel::phi1_derivative(double r, double r0) {
  return r >= r0 ? -1.0 / r : -r / (r0 * r0);
}

double DysonModel::phi2(double r, double r0) {
  if (r >= r0) return 0.0;
  return -std::log(r) - phi1(r, r0);
}

// --- Wealth ----------------------------------------------------------------

namespace {

void check_wealth_params(double kappa, double diffusion) {
  if (!(kappa > 0.0) || !(diffusion > 0.0)) {
    throw std::invalid_argument("wealth model needs kappa > 0 and D > 0");
  }
}

}  // namespace

double wealth_equilibrium_density(double y, double kappa, double diffusion, double eta) {
  check_wealth_params(kappa, diffusion);
  if (y <= 0.0) return 0.0;
  const double a = kappa / diffusion + 1.0;
  const double b = kappa * eta / diffusion;
  return std::exp(a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(y) - b / y);
}

double wealth_equilibrium_cdf(double y, double kappa, double diffusion, double eta) {
  check_wealth_params(kappa, diffusion);
  if (y <= 0.0) return 0.0;
  const double a = kappa / diffusion + 1.0;
  const double b = kappa * eta / diffusion;
  return boost::math::gamma_q(a, b / y);
}

double wealth_equilibrium_mode(double kappa, double diffusion, double eta) {
  check_wealth_params(kappa, diffusion);
  return kappa * eta / (2.0 * diffusion + kappa);
}

void WealthModel::validate() const {
  if (n < 2) throw std::invalid_argument("wealth model needs N >= 2");
  check_wealth_params(kappa, diffusion);
}

FirstOrderSystem WealthModel::system() const {
  validate();
  FirstOrderSystem sys;
  // phi(y) = y^2/2, so the trading force on i from k is -(Y_i - Y_k)
  sys.kernel = kernels::linear(-1.0);
  sys.alpha_n = kappa / static_cast<double>(n - 1);
  const double g = std::sqrt(2.0 * diffusion);
  sys.diffusion = [g](std::span<const double> y, std::span<double> out) { out[0] = g * y[0]; };
  return sys;
}

Points WealthModel::initial(RngStream& rng) const {
  Points y(n, 1);
  for (double& v : y.flat()) v = std::abs(rng.normal());
  return y;
}

std::size_t reflect_wealth(ParticleState& s) {
  std::size_t flips = 0;
  for (double& v : s.positions.flat()) {
    if (v < 0.0) {
      v = -v;
      ++flips;
    }
  }
  return flips;
}

double positive_fraction(const ParticleState& s) {
  const auto& y = s.positions.flat();
  if (y.empty()) return 1.0;
  const auto pos = std::count_if(y.begin(), y.end(), [](double v) { return v > 0.0; });
  return static_cast<double>(pos) / static_cast<double>(y.size());
}

// --- Cucker-Smale ----------------------------------------------------------

void CuckerSmaleModel::validate() const {
  if (n < 2) throw std::invalid_argument("Cucker-Smale model needs N >= 2");
  if (!(kappa >= 0.0)) throw std::invalid_argument("coupling strength must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::invalid_argument("communication exponent must lie in [0, 1)");
  }
}

double CuckerSmaleModel::psi(double r) const { return std::pow(1.0 + r * r, -0.5 * beta); }

ParticleState CuckerSmaleModel::initial(std::size_t dim, RngStream& rng) const {
  Points x(n, dim), v(n, dim);
  for (double& a : x.flat()) a = rng.normal();
  for (double& a : v.flat()) a = rng.normal();
  return ParticleState(std::move(x), std::move(v));
}

namespace {

void check_phase(const CuckerSmaleModel& m, const ParticleState& s) {
  m.validate();
  if (!s.velocities) throw std::invalid_argument("Cucker-Smale needs velocities");
  if (s.size() != m.n) throw std::invalid_argument("state size does not match the model's N");
}

void cs_accumulate(const CuckerSmaleModel& m, const ParticleState& s,
                   std::span<const std::size_t> members, double scale, Points& dv) {
  const Points& x = s.positions;
  const Points& v = *s.velocities;
  const std::size_t d = x.dim();
  for (std::size_t a = 0; a < members.size(); ++a) {
    const std::size_t i = members[a];
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      const std::size_t j = members[b];
      const double w = scale * m.psi(dist(x[i], x[j]));
      for (std::size_t c = 0; c < d; ++c) {
        const double f = w * (v[j][c] - v[i][c]);
        dv[i][c] += f;
        dv[j][c] -= f;
      }
    }
  }
}

}  // namespace

Points cs_rhs(const CuckerSmaleModel& m, const ParticleState& s) {
  check_phase(m, s);
  std::vector<std::size_t> all(s.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Points dv(s.size(), s.dim());
  cs_accumulate(m, s, all, m.kappa / static_cast<double>(s.size() - 1), dv);
  return dv;
}

Points cs_rhs(const CuckerSmaleModel& m, const ParticleState& s, const BatchDivision& division) {
  check_phase(m, s);
  if (division.num_particles() != s.size()) {
    throw std::invalid_argument("division does not match the particle count");
  }
  Points dv(s.size(), s.dim());
  for (const auto& batch : division.batches) {
    cs_accumulate(m, s, batch, m.kappa / static_cast<double>(batch.size() - 1), dv);
  }
  return dv;
}

ParticleState cs_rbm_step(const CuckerSmaleModel& m, const ParticleState& s, std::size_t p,
                          double dt, RngStream& rng) {
  if (p < 2) throw std::invalid_argument("batch size must be >= 2 (got " + std::to_string(p) + ")");
  const Points dv = p >= s.size() ? cs_rhs(m, s) : cs_rhs(m, s, random_division(s.size(), p, rng));
  ParticleState out = s;
  auto& x = out.positions.flat();
  auto& v = out.velocities->flat();
  const auto& v0 = s.velocities->flat();
  for (std::size_t a = 0; a < x.size(); ++a) {
    x[a] += dt * v0[a];
    v[a] += dt * dv.flat()[a];
  }
  out.time += dt;
  out.require_finite("Cucker-Smale step");
  return out;
}

namespace {

// (1/N^2) sum_{i,j} |z_i - z_j|^2 = 2 (mean |z|^2 - |mean z|^2)
double spread(const Points& z) {
  const std::size_t n = z.size(), d = z.dim();
  if (n == 0) return 0.0;
  std::vector<double> mean(d, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      mean[c] += z[i][c];
      sq += z[i][c] * z[i][c];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  double m2 = 0.0;
  for (double c : mean) m2 += (c * inv) * (c * inv);
  return std::max(0.0, 2.0 * (sq * inv - m2));
}

}  // namespace

FlockingFunctionals flocking_functionals(const ParticleState& s) {
  if (!s.velocities) throw std::invalid_argument("flocking functionals need velocities");
  return {spread(s.positions), spread(*s.velocities)};
}

// --- Consensus -------------------------------------------------------------

std::vector<double> ConsensusModel::default_decomposition(const Points& nu, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("consensus coupling must be positive");
  const std::size_t n = nu.size(), d = nu.dim();
  std::vector<double> out(n * n * d, 0.0);
  const double c = static_cast<double>(n - 1) / (kappa * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) out[(i * n + j) * d + k] = c * (nu[i][k] - nu[j][k]);
    }
  }
  return out;
}

ConsensusModel ConsensusModel::with_default_decomposition(Points nu, double kappa,
                                                          std::vector<double> adjacency) {
  ConsensusModel m;
  m.n = nu.size();
  m.dim = nu.dim();
  m.kappa = kappa;
  m.adjacency = std::move(adjacency);
  m.nu_bar = default_decomposition(nu, kappa);
  m.nu = std::move(nu);
  m.validate();
  return m;
}

double ConsensusModel::reconstruction_error() const {
  double err = 0.0;
  const double c = kappa / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) s += nubar(i, j)[k];
      }
      err = std::max(err, std::abs(c * s - nu[i][k]));
    }
  }
  return err;
}

double ConsensusModel::antisymmetry_error() const {
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < dim; ++k) {
        err = std::max(err, std::abs(nubar(i, j)[k] + nubar(j, i)[k]));
      }
    }
  }
  return err;
}

void ConsensusModel::validate() const {
  if (n < 2) throw std::invalid_argument("consensus model needs N >= 2");
  if (!(kappa > 0.0)) throw std::invalid_argument("consensus coupling must be positive");
  if (nu.size() != n || nu.dim() != dim) {
    throw std::invalid_argument("intrinsic velocities must be N x d");
  }
  if (nu_bar.size() != n * n * dim) throw std::invalid_argument("nubar must be N x N x d");
  if (!adjacency.empty()) {
    if (adjacency.size() != n * n) throw std::invalid_argument("adjacency must be N x N");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (a(i, j) < 0.0 || a(i, j) != a(j, i)) {
          throw std::invalid_argument("adjacency must be symmetric and nonnegative");
        }
      }
    }
  }
  double scale = 1.0;
  for (std::size_t k = 0; k < dim; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += nu[i][k];
      scale = std::max(scale, std::abs(nu[i][k]));
    }
    if (std::abs(s) > 1e-10 * scale * static_cast<double>(n)) {
      throw std::invalid_argument("intrinsic velocities must sum to zero");
    }
  }
  if (antisymmetry_error() > 1e-12 * scale * static_cast<double>(n)) {
    throw std::invalid_argument("nubar must be antisymmetric");
  }
  if (reconstruction_error() > 1e-10 * scale) {
    throw std::invalid_argument("nubar does not reconstruct the intrinsic velocities");
  }
}

namespace {

void consensus_accumulate(const ConsensusModel& m, const Points& q,
                          std::span<const std::size_t> members, double scale, Points& dq) {
  const std::size_t d = m.dim;
  std::vector<double> diff(d), g(d);
  for (std::size_t a = 0; a < members.size(); ++a) {
    const std::size_t i = members[a];
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      const std::size_t j = members[b];
      for (std::size_t c = 0; c < d; ++c) diff[c] = q[j][c] - q[i][c];
      if (m.gamma) {
        m.gamma(diff, g);
      } else {
        g = diff;
      }
      const double aij = m.a(i, j);
      const auto nij = m.nubar(i, j);
      const auto nji = m.nubar(j, i);
      // Gamma odd: the (j, i) interaction is -Gamma(q_j - q_i)
      for (std::size_t c = 0; c < d; ++c) {
        dq[i][c] += scale * (nij[c] + aij * g[c]);
        dq[j][c] += scale * (nji[c] - aij * g[c]);
      }
    }
  }
}

void check_consensus(const ConsensusModel& m, const Points& q) {
  if (q.size() != m.n || q.dim() != m.dim) {
    throw std::invalid_argument("consensus state must be N x d");
  }
}

}  // namespace

Points consensus_rhs(const ConsensusModel& m, const Points& q) {
  check_consensus(m, q);
  std::vector<std::size_t> all(m.n);
  for (std::size_t i = 0; i < m.n; ++i) all[i] = i;
  Points dq(m.n, m.dim);
  consensus_accumulate(m, q, all, m.kappa / static_cast<double>(m.n - 1), dq);
  return dq;
}

Points consensus_rhs(const ConsensusModel& m, const Points& q, const BatchDivision& division) {
  check_consensus(m, q);
  if (division.num_particles() != m.n) {
    throw std::invalid_argument("division does not match the particle count");
  }
  Points dq(m.n, m.dim);
  for (const auto& batch : division.batches) {
    consensus_accumulate(m, q, batch, m.kappa / static_cast<double>(batch.size() - 1), dq);
  }
  return dq;
}

Points consensus_rbm_step(const ConsensusModel& m, const Points& q, std::size_t p, double dt,
                          RngStream& rng) {
  if (p < 2) throw std::invalid_argument("batch size must be >= 2 (got " + std::to_string(p) + ")");
  const Points dq =
      p >= m.n ? consensus_rhs(m, q) : consensus_rhs(m, q, random_division(m.n, p, rng));
  Points out = q;
  for (std::size_t a = 0; a < out.flat().size(); ++a) out.flat()[a] += dt * dq.flat()[a];
  if (!out.all_finite()) throw NumericalError("consensus step produced non-finite values");
  return out;
}

ConsensusFunctionals consensus_functionals(const Points& q) {
  const std::size_t n = q.size();
  if (n == 0) return {0.0, 0.0};
  double m2 = 0.0;
  for (double v : q.flat()) m2 += v * v;
  double diam = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) diam = std::max(diam, dist(q[i], q[j]));
  }
  return {m2 / static_cast<double>(n), diam};
}

// --- Electrolyte -----------------------------------------------------------

void ElectrolyteModel::validate() const {
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("electrolyte needs an even number of ions (got " +
                                std::to_string(n) + ")");
  }
  if (!(box > 0.0)) throw std::invalid_argument("box length must be positive");
  if (!(diameter > 0.0)) throw std::invalid_argument("ion diameter must be positive");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (!(andersen_nu >= 0.0)) throw std::invalid_argument("collision frequency must be >= 0");
  if (!(lj_cutoff > 0.0)) throw std::invalid_argument("LJ cutoff must be positive");
  if (!(real_cutoff >= 0.0) || real_cutoff >= 0.5 * box) {
    throw std::invalid_argument("real-space cutoff must lie in [0, L/2)");
  }
}

PeriodicChargeSystem ElectrolyteModel::build(RngStream& rng) const {
  validate();
  const double min_sep = 0.8 * diameter;
  Points x(n, 3);
  std::size_t placed = 0, attempts = 0;
  std::vector<double> cand(3), dx(3);
  const std::optional<double> L = box;
  while (placed < n) {
    if (++attempts > 1000 * n) {
      throw std::invalid_argument("could not place ions without overlap; lower the density");
    }
    for (double& c : cand) c = box * rng.uniform();
    bool ok = true;
    for (std::size_t j = 0; j < placed && ok; ++j) {
      displacement(cand, x[j], L, dx);
      ok = squared_norm(dx) >= min_sep * min_sep;
    }
    if (!ok) continue;
    std::copy(cand.begin(), cand.end(), x[placed].begin());
    ++placed;
  }
  Points v(n, 3);
  const double sd = std::sqrt(temperature);
  for (double& a : v.flat()) a = sd * rng.normal();
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += v[i][c];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) v[i][c] -= mean;
  }
  PeriodicChargeSystem sys{ParticleState(std::move(x), std::move(v), box), {}};
  sys.charges.resize(n);
  for (std::size_t i = 0; i < n; ++i) sys.charges[i] = i < n / 2 ? 1.0 : -1.0;
  sys.validate();
  return sys;
}

MdOptions ElectrolyteModel::md_options(std::size_t p, double dt, FourierMode mode) const {
  validate();
  MdOptions opt;
  opt.params = real_cutoff > 0.0 ? EwaldParams::with_cutoff(real_cutoff, box, p)
                                  : EwaldParams::defaults(n, box, p);
  opt.lj = LennardJones{1.0, diameter, lj_cutoff * diameter};
  opt.thermostat = thermostat::Andersen{andersen_nu, temperature};
  opt.dt = dt;
  opt.mode = mode;
  return opt;
}

double dh_reference(double r) { return dh_slope * r + dh_intercept; }

}  // namespace rbm
