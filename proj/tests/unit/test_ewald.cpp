#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "rbm/ewald.hpp"

using namespace rbm;

namespace {

constexpr double pi = std::numbers::pi;

PeriodicChargeSystem random_neutral(std::size_t n, double L, std::uint64_t seed) {
  RngStream rng(seed, 5);
  Points x(n, 3), v(n, 3);
  for (double& a : x.flat()) a = L * rng.uniform();
  for (double& a : v.flat()) a = rng.normal();
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = (i % 2 == 0) ? 1.0 : -1.0;
  return {ParticleState(std::move(x), std::move(v), L), q};
}

// Direct 1D series H = sum_{|m| <= 2000} exp(-pi^2 m^2 / (alpha L^2)).
double direct_H(double alpha, double L) {
  double h = 0.0;
  for (int m = -2000; m <= 2000; ++m) h += std::exp(-pi * pi * m * m / (alpha * L * L));
  return h;
}

// Fourier energy by brute force over the ball |m| <= mc, all octants.
double brute_fourier_energy(const PeriodicChargeSystem& s, double alpha, int mc) {
  const double L = s.box(), V = L * L * L;
  double u = 0.0;
  for (int a = -mc; a <= mc; ++a)
    for (int b = -mc; b <= mc; ++b)
      for (int c = -mc; c <= mc; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        if (a * a + b * b + c * c > mc * mc) continue;
        const double k2 = 4 * pi * pi * (a * a + b * b + c * c) / (L * L);
        double re = 0, im = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
          const auto r = s.state.positions[i];
          const double ph = 2 * pi / L * (a * r[0] + b * r[1] + c * r[2]);
          re += s.charges[i] * std::cos(ph);
          im += s.charges[i] * std::sin(ph);
        }
        u += (re * re + im * im) * std::exp(-k2 / (4 * alpha)) / k2;
      }
  return 2 * pi / V * u;
}

}  // namespace

TEST_CASE("sum_S") {
  const double h = direct_H(1.0, 10.0);
  CHECK(h == doctest::Approx(std::sqrt(100.0 / pi)).epsilon(1e-12));
  CHECK(std::abs(sum_S(1.0, 10.0) - (h * h * h - 1.0)) < 1e-10);
  CHECK(sum_S(1.0, 10.0) == doctest::Approx(178.587).epsilon(1e-5));
  for (double a : {0.3, 2.0, 50.0}) {
    for (double L : {3.0, 20.0}) {
      const double hd = direct_H(a, L);
      CHECK(sum_S(a, L) > 0.0);
      CHECK(sum_S(a, L) == doctest::Approx(hd * hd * hd - 1.0).epsilon(1e-12));
    }
  }
  // 3D lattice sum of exp(-k^2/(4 alpha)) truncated at |m_c| <= 20
  double lattice = 0.0;
  for (int a = -20; a <= 20; ++a)
    for (int b = -20; b <= 20; ++b)
      for (int c = -20; c <= 20; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const double k2 = 4 * pi * pi * (a * a + b * b + c * c) / 100.0;
        lattice += std::exp(-k2 / 4.0);
      }
  CHECK(std::abs(sum_S(1.0, 10.0) - lattice) < 1e-10);
  CHECK_THROWS_AS(sum_S(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("reference cutoff bounds the Fourier tail") {
  const double alpha = 1.0, L = 10.0;
  const int mc = reference_mcut(alpha, L);
  const double k = 2 * pi * mc / L;
  CHECK(std::exp(-k * k / (4 * alpha)) <= 1e-12);
  CHECK(mc == 17);
}

TEST_CASE("frequency bank samples the discrete Gaussian") {
  const double alpha = 1.0, L = 10.0;
  KSampleBank bank = mh_sample_kvectors(alpha, L, 100000, RngStream(7, 0));
  // exact per-component moments of the 3D target without m = 0
  const double c = pi * pi / (alpha * L * L);
  double h = 0.0, h2 = 0.0;
  for (int m = -200; m <= 200; ++m) {
    h += std::exp(-c * m * m);
    h2 += m * m * std::exp(-c * m * m);
  }
  const double exact_var = h * h * h2 / (h * h * h - 1.0);

  double mean[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
  for (const auto& m : bank.samples()) {
    CHECK_FALSE((m[0] == 0 && m[1] == 0 && m[2] == 0));
    for (int k = 0; k < 3; ++k) {
      mean[k] += m[k];
      sq[k] += m[k] * m[k];
    }
  }
  const double n = static_cast<double>(bank.samples().size());
  // the chain is correlated through rejections; inflate the standard error by 1/acceptance
  const double se = std::sqrt(exact_var / n) / bank.acceptance_rate();
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(mean[k] / n) < 3 * se);
    CHECK(std::abs(sq[k] / n / exact_var - 1.0) < 0.05);
  }
  CHECK(bank.acceptance_rate() > 0.5);
}

TEST_CASE("frequency bank consumption, refill and determinism") {
  KSampleBank a(1.0, 10.0, 25, RngStream(3, 1)), b(1.0, 10.0, 25, RngStream(3, 1));
  std::vector<LatticeVector> first;
  for (int k = 0; k < 6; ++k) {
    auto s = a.take(10);
    auto t = b.take(10);
    CHECK(std::equal(s.begin(), s.end(), t.begin()));
    if (k == 0) first.assign(s.begin(), s.end());
  }
  CHECK(a.refills() >= 2);
  CHECK_THROWS_AS(a.take(26), std::invalid_argument);
}

TEST_CASE("structure factor") {
  PeriodicChargeSystem one{ParticleState(Points(1, 3), std::nullopt, 5.0), {1.0}};
  auto r = structure_factor(one, {1, 2, 3});
  CHECK(r.real() == doctest::Approx(1.0));
  CHECK(std::abs(r.imag()) < 1e-15);

  PeriodicChargeSystem pair{ParticleState(Points(2, 3, {1, 2, 3, 1, 2, 3}), std::nullopt, 5.0),
                            {1.0, -1.0}};
  CHECK(std::abs(structure_factor(pair, {2, -1, 1})) < 1e-15);

  auto s = random_neutral(20, 7.0, 1);
  for (LatticeVector m : {LatticeVector{1, 0, 0}, LatticeVector{-2, 3, 1}, LatticeVector{4, 4, -5}}) {
    std::complex<double> oracle = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::complex<double> e = 1.0;
      for (int c = 0; c < 3; ++c) e *= std::polar(1.0, 2 * pi * m[c] * s.state.positions[i][c] / 7.0);
      oracle += s.charges[i] * e;
    }
    auto got = structure_factor(s, m);
    CHECK(std::abs(got - oracle) < 1e-13);
    auto neg = structure_factor(s, {-m[0], -m[1], -m[2]});
    CHECK(std::abs(neg - std::conj(got)) < 1e-12);
  }
}

TEST_CASE("exact Fourier force") {
  const double L = 6.0;
  EwaldParams prm{1.2, 2.9, 8, 10};

  auto zero = random_neutral(6, L, 2);
  for (double& q : zero.charges) q = 0.0;
  const Points fz = fourier_forces_exact(zero, prm);
  for (double v : fz.flat()) CHECK(v == 0.0);

  auto s = random_neutral(24, L, 3);
  Points f = fourier_forces_exact(s, prm);
  double tot[3] = {0, 0, 0};
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int c = 0; c < 3; ++c) tot[c] += f[i][c];
  for (double t : tot) CHECK(std::abs(t) < 1e-10);

  // finite differences of the Fourier energy (no self term dependence)
  auto energy = [&](const PeriodicChargeSystem& x) { return ewald_energy_terms(x, prm).fourier; };
  const double h = 1e-5;
  for (std::size_t i : {0u, 5u, 17u}) {
    for (int c = 0; c < 3; ++c) {
      auto plus = s, minus = s;
      plus.state.positions[i][c] += h;
      minus.state.positions[i][c] -= h;
      const double fd = -(energy(plus) - energy(minus)) / (2 * h);
      CHECK(std::abs(f[i][c] - fd) < 1e-6);
    }
  }

  // +/- pair separated along x: force on + charge points towards the - charge
  PeriodicChargeSystem pair{
      ParticleState(Points(2, 3, {2.0, 3.0, 3.0, 3.0, 3.0, 3.0}), std::nullopt, L), {1.0, -1.0}};
  auto fp = fourier_force_exact(0, pair, prm);
  CHECK(fp[0] > 0.0);
  CHECK(std::abs(fp[1]) < 1e-12);
  CHECK(std::abs(fp[2]) < 1e-12);
  auto plus = pair, minus = pair;
  plus.state.positions[0][0] += h;
  minus.state.positions[0][0] -= h;
  CHECK(std::abs(fp[0] + (energy(plus) - energy(minus)) / (2 * h)) < 1e-6);
}

TEST_CASE("Fourier energy matches a brute-force lattice sum") {
  auto s = random_neutral(10, 5.0, 4);
  EwaldParams prm{1.0, 2.4, 7, 10};
  const double brute = brute_fourier_energy(s, 1.0, 7);
  CHECK(ewald_energy_terms(s, prm).fourier == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("RBE force") {
  const double L = 4.0, alpha = 0.8;
  auto s = random_neutral(8, L, 5);
  const double S = sum_S(alpha, L);

  std::vector<LatticeVector> batch{{1, 0, 0}, {0, -2, 1}, {3, 1, 1}};
  Points f = rbe_forces(s, batch, S);
  double tot[3] = {0, 0, 0};
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int c = 0; c < 3; ++c) tot[c] += f[i][c];
  for (double t : tot) CHECK(std::abs(t) < 1e-10);

  auto zero = s;
  for (double& q : zero.charges) q = 0.0;
  const Points fz = rbe_forces(zero, batch, S);
  for (double v : fz.flat()) CHECK(v == 0.0);

  // exhaustive weighting over |m_c| <= 6 recovers the exact force
  EwaldParams prm{alpha, 1.9, 6, 1};
  Points exact = fourier_forces_exact(s, prm);
  Points weighted(s.size(), 3);
  for (int a = -6; a <= 6; ++a)
    for (int b = -6; b <= 6; ++b)
      for (int c = -6; c <= 6; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const LatticeVector m{a, b, c};
        const double k2 = 4 * pi * pi * (a * a + b * b + c * c) / (L * L);
        const double prob = std::exp(-k2 / (4 * alpha)) / S;
        Points one = rbe_forces(s, std::span<const LatticeVector>(&m, 1), S);
        for (std::size_t k = 0; k < one.flat().size(); ++k) weighted.flat()[k] += prob * one.flat()[k];
      }
  for (std::size_t k = 0; k < exact.flat().size(); ++k) {
    CHECK(std::abs(weighted.flat()[k] - exact.flat()[k]) < 1e-8);
  }

  // Monte-Carlo average over fresh batches
  KSampleBank bank(alpha, L, 200000, RngStream(6, 0));
  const int batches = 100000;
  const std::size_t p = 10;
  std::vector<double> mean(s.size() * 3, 0.0), sq(s.size() * 3, 0.0);
  for (int t = 0; t < batches; ++t) {
    Points g = rbe_forces(s, bank.take(p), S);
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] += g.flat()[k];
      sq[k] += g.flat()[k] * g.flat()[k];
    }
  }
  int outside = 0;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double m = mean[k] / batches;
    const double se = std::sqrt((sq[k] / batches - m * m) / batches);
    // MH rejections repeat samples; allow for the resulting correlation
    const double tol = 3 * se / std::sqrt(bank.acceptance_rate());
    outside += std::abs(m - exact.flat()[k]) > tol;
  }
  CHECK(outside <= 1);
}

TEST_CASE("real-space force") {
  const double L = 8.0;
  EwaldParams prm{1.0, 3.5, 6, 10};

  PeriodicChargeSystem far{ParticleState(Points(2, 3, {0, 0, 0, 3.4, 0, 0}), std::nullopt, L),
                           {1.0, -1.0}};
  prm.alpha = 9.0;  // sqrt(alpha) r ~ 10
  auto ff = real_space_force(0, far, prm);
  CHECK(std::hypot(ff[0], ff[1], ff[2]) < 1e-10);
  prm.alpha = 1.0;

  auto s = random_neutral(32, L, 7);
  Points f = real_space_forces(s, prm);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double ref[3] = {0, 0, 0};
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j == i) continue;
      double dx[3], r2 = 0;
      for (int c = 0; c < 3; ++c) {
        dx[c] = s.state.positions[i][c] - s.state.positions[j][c];
        dx[c] -= L * std::floor(dx[c] / L + 0.5);
        r2 += dx[c] * dx[c];
      }
      const double r = std::sqrt(r2);
      if (r >= prm.r_cut) continue;
      const double mag = s.charges[i] * s.charges[j] *
                         (std::erfc(r) / r2 + 2 / std::sqrt(pi) * std::exp(-r2) / r);
      for (int c = 0; c < 3; ++c) ref[c] += mag * dx[c] / r;
    }
    for (int c = 0; c < 3; ++c) CHECK(std::abs(f[i][c] - ref[c]) < 1e-13);
  }

  PeriodicChargeSystem pair{ParticleState(Points(2, 3, {1, 1, 1, 1.5, 1.2, 0.7}), std::nullopt, L),
                            {1.0, 1.0}};
  auto f0 = real_space_force(0, pair, prm), f1 = real_space_force(1, pair, prm);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(f0[c] + f1[c]) < 1e-13);

  prm.r_cut = 4.0;
  CHECK_THROWS_AS(real_space_forces(s, prm), std::invalid_argument);
}

TEST_CASE("Ewald energy") {
  auto zero = random_neutral(6, 5.0, 8);
  for (double& q : zero.charges) q = 0.0;
  CHECK(ewald_energy(zero, EwaldParams{1.0, 2.0, 5, 1}) == 0.0);

  // alpha invariance with converged cutoffs
  auto s = random_neutral(20, 20.0, 9);
  std::vector<double> u;
  for (double a : {0.5, 1.0, 2.0}) {
    EwaldParams prm{a, 9.9, reference_mcut(a, 20.0), 1};
    u.push_back(ewald_energy(s, prm));
  }
  CHECK(std::abs(u[1] - u[0]) < 1e-4 * std::abs(u[1]));
  CHECK(std::abs(u[2] - u[1]) < 1e-4 * std::abs(u[1]));

  // free-space limit of a +/- pair
  PeriodicChargeSystem pair{
      ParticleState(Points(2, 3, {25.0, 25.0, 25.0, 26.0, 25.0, 25.0}), std::nullopt, 50.0),
      {1.0, -1.0}};
  EwaldParams big{0.09, 24.9, reference_mcut(0.09, 50.0), 1};
  CHECK(std::abs(ewald_energy(pair, big) + 1.0) < 0.01);
}

TEST_CASE("momentum identities on random configurations") {
  const double L = 6.0, alpha = 1.0;
  const double S = sum_S(alpha, L);
  EwaldParams prm{alpha, 2.9, 8, 10};
  KSampleBank bank(alpha, L, 1000, RngStream(10, 0));
  for (int t = 0; t < 100; ++t) {
    auto s = random_neutral(20, L, 100 + t);
    Points a = fourier_forces_exact(s, prm);
    Points b = rbe_forces(s, bank.take(10), S);
    double ta[3] = {0, 0, 0}, tb[3] = {0, 0, 0};
    for (std::size_t i = 0; i < s.size(); ++i)
      for (int c = 0; c < 3; ++c) {
        ta[c] += a[i][c];
        tb[c] += b[i][c];
      }
    for (int c = 0; c < 3; ++c) {
      CHECK(std::abs(ta[c]) < 1e-10);
      CHECK(std::abs(tb[c]) < 1e-10);
    }
  }
}

TEST_CASE("electroneutrality and parameter validation") {
  auto s = random_neutral(4, 5.0, 11);
  CHECK_NOTHROW(s.validate());
  s.charges[0] = 2.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("electroneutral"), std::invalid_argument);
  EwaldParams bad{1.0, 2.6, 5, 1};
  CHECK_THROWS_AS(bad.validate(5.0), std::invalid_argument);
  auto d = EwaldParams::defaults(300, 10.0);
  CHECK(std::sqrt(d.alpha) == doctest::Approx(std::cbrt(0.3)));
  CHECK(d.r_cut < 5.0);
  CHECK_NOTHROW(d.validate(10.0));
}

TEST_CASE("electrolyte MD step") {
  const double L = 6.0;
  auto s = random_neutral(40, L, 12);
  MdOptions opt;
  opt.params = EwaldParams{1.0, 2.9, 8, 10};
  opt.lj = LennardJones{1.0, 0.2, 0.5};
  opt.dt = 1e-4;

  SUBCASE("momentum is conserved before the thermostat") {
    MdState md{s, {}, false, 0};
    KSampleBank bank(1.0, L, 1000, RngStream(13, 0));
    Streams rng = Streams::for_replica(14);
    for (int k = 0; k < 20; ++k) {
      MdStepInfo info;
      rbe_md_step(md, opt, bank, rng, &info);
      for (double p : info.momentum_change) CHECK(std::abs(p) < 1e-10);
    }
    CHECK(md.step == 20);
  }
  SUBCASE("same seed gives the same trajectory") {
    opt.thermostat = thermostat::Andersen{3.0, 1.0};
    MdState a{s, {}, false, 0}, b{s, {}, false, 0};
    KSampleBank ba(1.0, L, 1000, RngStream(15, 0)), bb(1.0, L, 1000, RngStream(15, 0));
    Streams ra = Streams::for_replica(16), rb = Streams::for_replica(16);
    for (int k = 0; k < 10; ++k) {
      rbe_md_step(a, opt, ba, ra);
      rbe_md_step(b, opt, bb, rb);
    }
    CHECK(a.system.state.positions == b.system.state.positions);
    CHECK(*a.system.state.velocities == *b.system.state.velocities);
  }
  SUBCASE("exact mode is deterministic velocity Verlet") {
    opt.mode = FourierMode::exact;
    MdState md{s, {}, false, 0};
    KSampleBank bank(1.0, L, 10, RngStream(17, 0));
    Streams rng = Streams::for_replica(18);
    rbe_md_step(md, opt, bank, rng);
    Points f0 = electrolyte_forces(s, opt, nullptr, 0.0);
    auto x = s;
    for (std::size_t k = 0; k < x.state.positions.flat().size(); ++k) {
      x.state.positions.flat()[k] +=
          opt.dt * (x.state.velocities->flat()[k] + 0.5 * opt.dt * f0.flat()[k]);
    }
    x.state.wrap();
    CHECK(bank.cursor() == 0);
    for (std::size_t k = 0; k < x.state.positions.flat().size(); ++k) {
      CHECK(md.system.state.positions.flat()[k] ==
            doctest::Approx(x.state.positions.flat()[k]).epsilon(1e-12));
    }
  }
  SUBCASE("rejects Nose-Hoover") {
    opt.thermostat = thermostat::NoseHoover{1.0, 1.0};
    MdState md{s, {}, false, 0};
    KSampleBank bank(1.0, L, 100, RngStream(19, 0));
    Streams rng = Streams::for_replica(20);
    CHECK_THROWS_AS(rbe_md_step(md, opt, bank, rng), std::invalid_argument);
  }
}

TEST_CASE("CSV writers") {
  std::ostringstream t, e;
  write_trajectory_header(t);
  ParticleState s(Points(1, 3, {1, 2, 3}), Points(1, 3, {4, 5, 6}), 10.0);
  write_trajectory_rows(t, 7, s);
  CHECK(t.str() == "step,particle,x,y,z,vx,vy,vz\n7,0,1,2,3,4,5,6\n");
  write_energy_header(e);
  write_energy_row(e, 3, EwaldEnergy{1.0, 2.0, -3.0}, 1.5, 1);
  CHECK(e.str() == "step,U_real,U_fourier,U_self,kinetic,T_inst\n3,1,2,-3,1.5,1\n");
}
