#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../support/oracles.hpp"
#include "rbm/samplers.hpp"
#include "rbm/svgd.hpp"

using namespace rbm;

namespace {

VectorField identity_field() {
  return [](std::span<const double> x, std::span<double> out) {
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = x[c];
  };
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("rbmc_propose without forces is Brownian") {
  GibbsTarget t;
  t.n = 5;
  t.dim = 1;
  t.beta = 2.0;
  Points x(5, 1, {0.0, 1.0, 2.0, 3.0, 4.0});
  RngStream rng(1, 0);
  const double dt = 0.01;
  const std::size_t m = 3;
  std::vector<double> c;
  for (int k = 0; k < 100000; ++k) c.push_back(rbmc_propose(2, x, t, m, 2, dt, rng)[0]);
  const double expected = m * 2.0 * dt / (4.0 * 1.0 * 2.0);
  CHECK(std::abs(mean_of(c) - 2.0) < 3 * std::sqrt(expected / 1e5));
  CHECK(var_of(c) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("rbmc_propose full batch without noise is one Euler step") {
  GibbsTarget t;
  t.n = 4;
  t.dim = 2;
  t.w = 0.5;
  t.grad_potential = identity_field();
  t.phi1_derivative = [](double r) { return std::sin(r); };
  Points x(4, 2, {0.1, 0.2, 1.0, -0.5, -0.7, 0.3, 0.4, 0.9});
  RngStream rng(2, 0);
  const double dt = 0.05;
  auto got = rbmc_propose(1, x, t, 1, 2, dt, rng, ProposalOptions{false, true});
  std::vector<double> want(x[1].begin(), x[1].end());
  double drift[2] = {x[1][0] / (0.5 * 3), x[1][1] / (0.5 * 3)};
  for (std::size_t j : {0u, 2u, 3u}) {
    const double dx = x[1][0] - x[j][0], dy = x[1][1] - x[j][1];
    const double r = std::hypot(dx, dy);
    drift[0] += std::sin(r) * dx / r / 3;
    drift[1] += std::sin(r) * dy / r / 3;
  }
  CHECK(got[0] == doctest::Approx(want[0] - dt * drift[0]).epsilon(1e-14));
  CHECK(got[1] == doctest::Approx(want[1] - dt * drift[1]).epsilon(1e-14));
}

TEST_CASE("rbmc_propose one-step mean matches the drift formula") {
  GibbsTarget t;
  t.n = 3;
  t.dim = 1;
  t.grad_potential = identity_field();
  t.phi1_derivative = [](double r) { return r; };  // phi1 = r^2/2
  Points x(3, 1, {0.3, -1.0, 2.0});
  const double dt = 0.1;
  // E over the single random partner j in {1, 2} of (x - x_j), plus x/(N-1)
  const double x0 = 0.3;
  const double mean_drift = x0 / 2 + 0.5 * ((x0 + 1.0) + (x0 - 2.0));
  std::vector<double> c;
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    RngStream rng(seed, 3);
    c.push_back(rbmc_propose(0, x, t, 1, 2, dt, rng)[0]);
  }
  const double se = std::sqrt(var_of(c) / c.size());
  CHECK(std::abs(mean_of(c) - (x0 - dt * mean_drift)) < 3 * se);
}

TEST_CASE("rbmc_accept") {
  GibbsTarget t;
  t.n = 2;
  t.dim = 1;
  Points x(2, 1, {0.0, 1.0});
  RngStream rng(4, 0);
  std::vector<double> old{0.0}, cand{0.5};
  CHECK(rbmc_accept(0, old, cand, x, t, rng));  // phi2 = 0

  t.phi2 = [](double r) { return 1.0 / r; };
  CHECK(rbmc_accept(0, old, old, x, t, rng));
  CHECK(rbmc_phi2_delta(0, old, cand, x, t) == doctest::Approx(1.0));
  int acc = 0;
  const int trials = 100000;
  for (int k = 0; k < trials; ++k) acc += rbmc_accept(0, old, cand, x, t, rng);
  const double pexp = std::exp(-1.0);
  CHECK(std::abs(acc / double(trials) - pexp) < 3 * std::sqrt(pexp * (1 - pexp) / trials));

  std::vector<double> hit{1.0};
  CHECK_FALSE(rbmc_accept(0, old, hit, x, t, rng));
}

TEST_CASE("spatial hash and full scan give the same phi2 difference") {
  GibbsTarget t;
  t.n = 300;
  t.dim = 2;
  t.phi2 = [](double r) { return (0.2 - r) * (0.2 - r) / r; };
  t.phi2_range = 0.2;
  RngStream rng(5, 0);
  Points x(300, 2);
  for (double& v : x.flat()) v = 2.0 * rng.uniform();
  SpatialHash grid(x, 0.2);
  for (int k = 0; k < 500; ++k) {
    const std::size_t i = rng.index(300);
    std::vector<double> cand{x[i][0] + 0.1 * rng.normal(), x[i][1] + 0.1 * rng.normal()};
    const double a = rbmc_phi2_delta(i, x[i], cand, x, t, &grid);
    const double b = rbmc_phi2_delta(i, x[i], cand, x, t);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("a single particle runs unadjusted Langevin") {
  GibbsTarget t;
  t.n = 1;
  t.dim = 1;
  t.grad_potential = identity_field();
  const double dt = 0.05;
  RbmcChain chain(t, Points(1, 1, {0.0}), 1, 2, StepSchedule::constant(dt), RngStream(6, 0));
  double s2 = 0;
  const int burn = 1000, n = 400000;
  for (int k = 0; k < burn + n; ++k) {
    chain.step();
    if (k >= burn) s2 += chain.config()[0][0] * chain.config()[0][0];
  }
  // Euler-Maruyama on the OU process has stationary variance 1 / (1 - dt/2)
  CHECK(s2 / n == doctest::Approx(1.0 / (1.0 - dt / 2)).epsilon(0.03));
  CHECK(chain.stats().acceptance_rate() == 1.0);
}

TEST_CASE("phi2-only chain samples the two-particle Gibbs density") {
  // V = x^2/2, phi1 = 0, phi2(r) = 2 (1 - r)^2 on r < 1, beta = w = 1.
  GibbsTarget t;
  t.n = 2;
  t.dim = 1;
  t.grad_potential = identity_field();
  t.phi2 = [](double r) { return 2.0 * (1.0 - r) * (1.0 - r); };
  t.phi2_range = 1.0;
  RbmcChain chain(t, Points(2, 1, {-0.5, 0.5}), 20, 2, StepSchedule::constant(0.005),
                  RngStream(7, 0), ProposalOptions{true, true});

  // relative coordinate r = x1 - x2 has density ~ exp(-r^2/4 - phi2(|r|))
  auto density = [](double r) {
    const double a = std::abs(r);
    return std::exp(-r * r / 4 - (a < 1 ? 2 * (1 - a) * (1 - a) : 0.0));
  };
  const int bins = 20;
  const double lo = -4.0, hi = 4.0, width = (hi - lo) / bins;
  std::vector<double> prob(bins, 0.0);
  double total = 0.0;
  const int sub = 2000;
  for (int b = 0; b < bins; ++b) {
    const double a = b == 0 ? -12.0 : lo + b * width;
    const double z = b == bins - 1 ? 12.0 : lo + (b + 1) * width;
    const double h = (z - a) / sub;
    double s = density(a) + density(z);
    for (int k = 1; k < sub; ++k) s += density(a + k * h) * (k % 2 ? 4 : 2);
    prob[b] = s * h / 3;
    total += prob[b];
  }
  for (double& p : prob) p /= total;

  std::vector<double> counts(bins, 0.0);
  int samples = 0;
  const int sweeps = 1000000, thin = 25;
  for (int s = 0; s < 2000; ++s) chain.sweep();
  for (int s = 0; s < sweeps; ++s) {
    chain.sweep();
    if (s % thin) continue;
    const double r = chain.config()[0][0] - chain.config()[1][0];
    int b = static_cast<int>(std::floor((r - lo) / width));
    b = std::clamp(b, 0, bins - 1);
    counts[b] += 1;
    ++samples;
  }
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double e = prob[b] * samples;
    chi2 += (counts[b] - e) * (counts[b] - e) / e;
  }
  // 99th percentile of chi^2 with 19 degrees of freedom
  CHECK(chi2 < 36.19);
  CHECK(chain.stats().acceptance_rate() > 0.0);
  CHECK(chain.stats().acceptance_rate() < 1.0);
}

TEST_CASE("chain validation") {
  GibbsTarget t;
  t.n = 3;
  t.dim = 1;
  CHECK_THROWS_AS(RbmcChain(t, Points(2, 1), 1, 2, StepSchedule::constant(0.1), RngStream(1, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(RbmcChain(t, Points(3, 1), 1, 1, StepSchedule::constant(0.1), RngStream(1, 1)),
                  std::invalid_argument);
  t.beta = 0.0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------

namespace {

SvgdState normal_target(Points x, double h) {
  return SvgdState{std::move(x), SvgdKernel::gaussian(h), identity_field()};
}

}  // namespace

TEST_CASE("svgd kernel is symmetric and positive") {
  auto k = SvgdKernel::gaussian(0.7);
  RngStream rng(8, 0);
  std::vector<double> x(3), y(3), gxy(3), gyx(3);
  for (int t = 0; t < 1000; ++t) {
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    CHECK(std::abs(k.value(x, y) - k.value(y, x)) < 1e-12);
    CHECK(k.value(x, x) > 0.0);
    k.grad_y(x, y, gxy);
    k.grad_y(y, x, gyx);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(gxy[c] + gyx[c]) < 1e-12);
  }
}

TEST_CASE("svgd_velocity examples") {
  auto one = normal_target(Points(1, 1, {1.0}), 1.0);
  CHECK(svgd_velocity(0, one)[0] == doctest::Approx(-1.0));

  // N = 1 reduces to gradient descent on V scaled by K(x, x)
  auto map = normal_target(Points(1, 2, {0.5, -2.0}), 0.3);
  auto v = svgd_velocity(0, map);
  CHECK(v[0] == doctest::Approx(-0.5));
  CHECK(v[1] == doctest::Approx(2.0));

  auto sym = normal_target(Points(4, 1, {-1.3, -0.2, 0.2, 1.3}), 0.8);
  Points vs = svgd_velocities(sym, 4, nullptr);
  CHECK(std::abs(vs[0][0] + vs[3][0]) < 1e-12);
  CHECK(std::abs(vs[1][0] + vs[2][0]) < 1e-12);
}

TEST_CASE("svgd two-particle fixed point") {
  const double h = 0.9;
  // stationarity of the pair at +/- c: -c + exp(-4c^2/h)(4c/h + c) = 0, by bisection
  auto f = [h](double c) { return -c + std::exp(-4 * c * c / h) * (4 * c / h + c); };
  double a = 1e-3, b = 5.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (a + b);
    (f(a) * f(mid) <= 0 ? b : a) = mid;
  }
  const double c = 0.5 * (a + b);
  CHECK(c * c == doctest::Approx(h * std::log(1 + 4 / h) / 4));
  auto s = normal_target(Points(2, 1, {-c, c}), h);
  Points v = svgd_velocities(s, 2, nullptr);
  CHECK(std::abs(v[0][0]) < 1e-10);
  CHECK(std::abs(v[1][0]) < 1e-10);
}

TEST_CASE("rbm_svgd_step reductions") {
  RngStream init(9, 0);
  Points x(16, 2);
  for (double& v : x.flat()) v = 2 * init.normal() + 1;
  auto a = normal_target(x, 1.0), b = normal_target(x, 1.0);
  RngStream r1(10, 0), r2(10, 0);
  for (int k = 0; k < 50; ++k) {
    Points v = svgd_velocities(b, 16, nullptr);
    for (std::size_t t = 0; t < v.flat().size(); ++t) b.particles.flat()[t] += 0.05 * v.flat()[t];
    rbm_svgd_step(a, 16, 0.05, r1);
  }
  CHECK(a.particles == b.particles);

  auto c = normal_target(x, 1.0);
  rbm_svgd_step(c, 4, 0.0, r2);
  CHECK(c.particles == x);
  CHECK_THROWS_AS(rbm_svgd_step(c, 1, 0.1, r2), std::invalid_argument);
}

TEST_CASE("svgd batch term is unbiased over divisions") {
  RngStream init(11, 0);
  Points x(4, 1);
  for (double& v : x.flat()) v = init.normal();
  auto s = normal_target(x, 0.6);
  Points full = svgd_velocities(s, 4, nullptr);
  const auto divisions = testing::all_divisions(4, 2);
  Points mean(4, 1);
  for (const auto& blocks : divisions) {
    std::vector<std::size_t> perm;
    for (const auto& b : blocks) perm.insert(perm.end(), b.begin(), b.end());
    Points v = svgd_velocities(s, division_from_permutation(perm, 2));
    for (std::size_t k = 0; k < 4; ++k) mean.flat()[k] += v.flat()[k] / divisions.size();
  }
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(mean.flat()[k] - full.flat()[k]) < 1e-12);
}

TEST_CASE("svgd schedules and divergence guard") {
  Points x(1, 1, {1.0}), v(1, 1, {-2.0});
  auto c = SvgdSchedule::constant(0.1);
  c.apply(x, v, 1);
  CHECK(x[0][0] == doctest::Approx(0.8));
  auto inv = SvgdSchedule::inverse(1.0, 1.0);
  inv.apply(x, v, 3);
  CHECK(x[0][0] == doctest::Approx(0.3));
  auto ada = SvgdSchedule::adagrad(0.1, 1e-12);
  ada.apply(x, v, 1);
  CHECK(x[0][0] == doctest::Approx(0.2));
  ada.apply(x, v, 2);
  CHECK(x[0][0] == doctest::Approx(0.2 - 0.1 / std::sqrt(2.0)));

  SvgdState bad{Points(2, 1, {1.0, 2.0}), SvgdKernel::gaussian(1.0),
                [](std::span<const double> y, std::span<double> out) { out[0] = -1e3 * y[0]; }};
  RngStream rng(12, 0);
  CHECK_THROWS_AS(
      [&] {
        for (int k = 0; k < 100; ++k) rbm_svgd_step(bad, 2, 10.0, rng);
      }(),
      NumericalError);
}
