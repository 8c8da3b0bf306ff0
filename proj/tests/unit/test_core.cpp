#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "../support/oracles.hpp"
#include "rbm/batching.hpp"
#include "rbm/cell_list.hpp"
#include "rbm/forces.hpp"

using namespace rbm;

namespace {

ParticleState line_state(std::vector<double> xs) {
  return ParticleState(Points(xs.size(), 1, xs));
}

ParticleState random_state(std::size_t n, std::size_t d, RngStream& rng, double scale = 1.0,
                           std::optional<double> box = std::nullopt) {
  Points p(n, d);
  for (double& v : p.flat()) v = box ? rng.uniform() * *box : scale * rng.normal();
  return ParticleState(std::move(p), std::nullopt, box);
}

}  // namespace

TEST_CASE("ParticleState validation and wrapping") {
  ParticleState s(Points(2, 2, {0.5, -0.25, 10.0, 3.0}), std::nullopt, 4.0);
  s.wrap();
  CHECK(s.positions[0][1] == doctest::Approx(3.75));
  CHECK(s.positions[1][0] == doctest::Approx(2.0));
  for (double x : s.positions.flat()) {
    CHECK(x >= 0.0);
    CHECK(x < 4.0);
  }
  s.velocities = Points(3, 2);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.velocities = Points(2, 2);
  CHECK_NOTHROW(s.validate());
  s.positions[0][0] = std::nan("");
  CHECK_THROWS_AS(s.require_finite("test"), NumericalError);
}

TEST_CASE("minimum image wraps into [-L/2, L/2)") {
  std::vector<double> out(1);
  displacement(std::vector<double>{0.1}, std::vector<double>{9.9}, 10.0, out);
  CHECK(out[0] == doctest::Approx(0.2));
  displacement(std::vector<double>{9.9}, std::vector<double>{0.1}, 10.0, out);
  CHECK(out[0] == doctest::Approx(-0.2));
  displacement(std::vector<double>{5.0}, std::vector<double>{0.0}, 10.0, out);
  CHECK(out[0] == doctest::Approx(-5.0));
}

TEST_CASE("RngStream determinism") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  std::vector<double> xa, xb, xc;
  for (int k = 0; k < 100; ++k) {
    xa.push_back(a.normal());
    xb.push_back(b.normal());
    xc.push_back(c.normal());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  auto s1 = a.substream(3), s2 = b.substream(3);
  CHECK(s1.uniform() == s2.uniform());
}

TEST_CASE("random_division basic cases") {
  RngStream rng(1, 0);
  auto one = random_division(4, 4, rng);
  REQUIRE(one.num_batches() == 1);
  CHECK(one.batches[0] == std::vector<std::size_t>{0, 1, 2, 3});

  auto two = random_division(4, 2, rng);
  REQUIRE(two.num_batches() == 2);
  std::set<std::size_t> all;
  for (const auto& b : two.batches) {
    CHECK(b.size() == 2);
    all.insert(b.begin(), b.end());
  }
  CHECK(all.size() == 4);

  CHECK_THROWS_AS(random_division(4, 1, rng), std::invalid_argument);
  CHECK_THROWS_AS(random_division(4, 5, rng), std::invalid_argument);
}

TEST_CASE("random_division remainder handling") {
  RngStream rng(2, 0);
  auto a = random_division(7, 3, rng);  // remainder 1 merges
  REQUIRE(a.num_batches() == 2);
  CHECK(a.batches[0].size() == 3);
  CHECK(a.batches[1].size() == 4);
  auto b = random_division(8, 3, rng);  // remainder 2 stands alone
  REQUIRE(b.num_batches() == 3);
  CHECK(b.batches[2].size() == 2);
}

TEST_CASE("random_division pair frequency matches 1/3") {
  // Oracle: of the 3 perfect pairings of 4 elements exactly one pairs {0,1}.
  const auto pairings = testing::all_divisions(4, 2);
  REQUIRE(pairings.size() == 3);
  const double expected =
      static_cast<double>(std::count_if(pairings.begin(), pairings.end(), [](const auto& d) {
        return d[0] == std::vector<std::size_t>{0, 1};
      })) /
      3.0;
  CHECK(expected == doctest::Approx(1.0 / 3.0));

  const int seeds = 300000;
  int together = 0;
  for (int s = 0; s < seeds; ++s) {
    RngStream rng(static_cast<std::uint64_t>(s), 0);
    auto div = random_division(4, 2, rng);
    together += div.assignment[0] == div.assignment[1];
  }
  CHECK(std::abs(together / static_cast<double>(seeds) - expected) < 0.005);
}

TEST_CASE("random_division partition property and determinism") {
  RngStream gen(99, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 2 + gen.index(5);
    const std::size_t n = p * (1 + gen.index(20));
    RngStream r1(trial, 1), r2(trial, 1);
    auto div = random_division(n, p, r1);
    std::vector<int> seen(n, 0);
    std::map<std::size_t, std::size_t> per_batch;
    for (std::size_t b = 0; b < div.num_batches(); ++b) {
      for (std::size_t i : div.batches[b]) {
        ++seen[i];
        CHECK(div.assignment[i] == b);
      }
    }
    for (std::size_t i = 0; i < n; ++i) ++per_batch[div.assignment[i]];
    for (auto [b, count] : per_batch) CHECK(count == p);
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(random_division(n, p, r2).assignment == div.assignment);
  }
}

TEST_CASE("sample_batch_with_replacement") {
  RngStream rng(3, 0);
  CHECK(sample_batch_with_replacement(5, 5, rng) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK_THROWS_AS(sample_batch_with_replacement(4, 5, rng), std::invalid_argument);
  for (int k = 0; k < 1000; ++k) {
    auto s = sample_batch_with_replacement(20, 6, rng);
    CHECK(s.size() == 6);
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.back() < 20);
  }
  // Oracle: uniform over the C(4,2) = 6 unordered pairs.
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    auto s = sample_batch_with_replacement(4, 2, rng);
    ++counts[{s[0], s[1]}];
  }
  CHECK(counts.size() == 6);
  for (auto& [pair, c] : counts) CHECK(std::abs(c / double(draws) - 1.0 / 6.0) < 0.01);
}

TEST_CASE("batch_force") {
  auto s = line_state({0, 1, 2, 3});
  const std::vector<std::size_t> b01{0, 1};
  auto zero = batch_force(0, s, b01, kernels::zero(), 1.0 / 3);
  CHECK(zero[0] == 0.0);

  // prefactor (1/3)(3/1) = 1, K(0 - 1) = -1
  CHECK(batch_force(0, s, b01, kernels::linear(), 1.0 / 3)[0] == doctest::Approx(-1.0));

  const std::vector<std::size_t> all{0, 1, 2, 3};
  RngStream rng(5, 0);
  auto r = random_state(4, 2, rng);
  for (std::size_t i = 0; i < 4; ++i) {
    auto bf = batch_force(i, r, all, kernels::gaussian(), 1.0 / 3);
    auto ff = full_force(i, r, kernels::gaussian(), 1.0 / 3);
    CHECK(bf[0] == ff[0]);
    CHECK(bf[1] == ff[1]);
  }
  CHECK_THROWS_AS(batch_force(2, s, b01, kernels::linear(), 1.0), std::invalid_argument);
}

TEST_CASE("full_force") {
  auto s = line_state({0, 1});
  CHECK(full_force(0, s, kernels::linear(), 1.0)[0] == doctest::Approx(-1.0));

  RngStream rng(6, 0);
  auto r = random_state(16, 3, rng);
  const auto k = kernels::gaussian(0.7);
  // naive double loop oracle
  for (std::size_t i = 0; i < 16; ++i) {
    double ref[3] = {0, 0, 0};
    for (std::size_t j = 0; j < 16; ++j) {
      if (j == i) continue;
      double dx[3], r2 = 0;
      for (int c = 0; c < 3; ++c) {
        dx[c] = r.positions[i][c] - r.positions[j][c];
        r2 += dx[c] * dx[c];
      }
      const double e = std::exp(-r2 / (2 * 0.49));
      for (int c = 0; c < 3; ++c) ref[c] += dx[c] * e;
    }
    auto f = full_force(i, r, k, 1.0 / 15);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(f[c] - ref[c] / 15) < 1e-14);
  }

  double total[3] = {0, 0, 0};
  for (std::size_t i = 0; i < 16; ++i) {
    auto f = full_force(i, r, kernels::linear(2.0), 1.0);
    for (int c = 0; c < 3; ++c) total[c] += f[c];
  }
  for (double t : total) CHECK(std::abs(t) < 1e-10);
}

TEST_CASE("chi examples") {
  auto s = line_state({0, 1, 2, 3});
  const std::vector<std::size_t> all{0, 1, 2, 3}, b01{0, 1};
  CHECK(std::abs(chi(0, s, all, kernels::linear())[0]) < 1e-15);
  CHECK(chi(0, s, b01, kernels::constant({2.5}))[0] == doctest::Approx(0.0));
  CHECK(chi(0, s, b01, kernels::linear())[0] == doctest::Approx(1.0));
}

TEST_CASE("chi_variance_exact examples") {
  auto s = line_state({0, 1, 2, 3});
  CHECK(chi_variance_exact(0, s, 4, kernels::linear()) == 0.0);
  CHECK(chi_variance_exact(0, s, 2, kernels::constant({1.0})) == doctest::Approx(0.0));

  // enumeration over the 3 divisions
  double mean = 0, sq = 0;
  for (const auto& div : testing::all_divisions(4, 2)) {
    for (const auto& b : div) {
      if (std::find(b.begin(), b.end(), 0) == b.end()) continue;
      const double c = chi(0, s, b, kernels::linear())[0];
      mean += c / 3;
      sq += c * c / 3;
    }
  }
  CHECK(std::abs(mean) < 1e-12);
  CHECK(std::abs(sq - mean * mean - chi_variance_exact(0, s, 2, kernels::linear())) < 1e-12);
  CHECK(chi_variance_exact(0, s, 2, kernels::linear()) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("estimator unbiasedness and variance identity by enumeration") {
  RngStream rng(11, 0);
  const std::vector<std::pair<std::size_t, std::size_t>> cases{{4, 2}, {6, 2}, {6, 3}, {8, 2},
                                                               {8, 4}};
  const std::vector<KernelSpec> ks{kernels::linear(), kernels::gaussian(), kernels::sine()};
  for (std::size_t d : {1u, 2u}) {
    for (auto [n, p] : cases) {
      const auto divisions = testing::all_divisions(n, p);
      CHECK(divisions.size() == static_cast<std::size_t>(testing::division_count(n, p) + 0.5));
      for (const auto& k : ks) {
        auto s = random_state(n, d, rng, 2.0);
        for (std::size_t i = 0; i < n; ++i) {
          std::vector<double> mean(d, 0.0);
          double second = 0.0;
          for (const auto& div : divisions) {
            for (const auto& b : div) {
              if (std::find(b.begin(), b.end(), i) == b.end()) continue;
              auto c = chi(i, s, b, k);
              for (std::size_t a = 0; a < d; ++a) {
                mean[a] += c[a];
                second += c[a] * c[a];
              }
            }
          }
          const double m = static_cast<double>(divisions.size());
          double mean_sq = 0.0;
          for (double& v : mean) {
            v /= m;
            CHECK(std::abs(v) < 1e-12);
            mean_sq += v * v;
          }
          const double var = second / m - mean_sq;
          CHECK(std::abs(var - chi_variance_exact(i, s, p, k)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("batch forces of one division conserve momentum") {
  RngStream rng(12, 0);
  auto s = random_state(40, 3, rng);
  auto div = random_division(40, 5, rng);
  double total[3] = {0, 0, 0};
  for (const auto& b : div.batches) {
    for (std::size_t i : b) {
      auto f = batch_force(i, s, b, kernels::gaussian(), 1.0 / 39);
      for (int c = 0; c < 3; ++c) total[c] += f[c];
    }
  }
  for (double t : total) CHECK(std::abs(t) < 1e-10);
}

TEST_CASE("short_range_force") {
  const double L = 8.0, r0 = 1.5;
  auto k = kernels::split_radial([](double r) { return 1.0 / (r * r); }, r0, true);

  ParticleState sparse(Points(2, 3, {1, 1, 1, 5, 5, 5}), std::nullopt, L);
  auto f0 = short_range_force(0, sparse, k, r0, 1.0);
  for (double v : f0) CHECK(v == 0.0);

  RngStream rng(13, 0);
  auto s = random_state(64, 3, rng, 1.0, L);
  for (std::size_t i = 0; i < 64; ++i) {
    auto f = short_range_force(i, s, k, r0, 0.5);
    std::vector<double> ref(3, 0.0), dx(3), kv(3);
    for (std::size_t j = 0; j < 64; ++j) {
      if (j == i) continue;
      displacement(s.positions[i], s.positions[j], L, dx);
      if (std::sqrt(squared_norm(dx)) >= r0) continue;
      k.short_part(dx, kv);
      for (int c = 0; c < 3; ++c) ref[c] += 0.5 * kv[c];
    }
    for (int c = 0; c < 3; ++c) CHECK(std::abs(f[c] - ref[c]) < 1e-13 * (1 + std::abs(ref[c])));
  }

  ParticleState edge(Points(2, 3, {0.1, 0, 0, L - 0.1, 0, 0}), std::nullopt, L);
  auto fe = short_range_force(0, edge, kernels::linear(), r0, 1.0);
  CHECK(fe[0] == doctest::Approx(0.2));  // K(x) = x at x = +0.2

  CHECK_THROWS_AS(short_range_force(0, edge, k, 4.0, 1.0), std::invalid_argument);
}

TEST_CASE("cell list neighbour sets match brute force in 1-3 dimensions") {
  RngStream rng(14, 0);
  for (std::size_t d = 1; d <= 3; ++d) {
    const double L = 10.0, rc = 1.7;
    auto s = random_state(d == 1 ? 40 : 120, d, rng, 1.0, L);
    CellList cells(s.positions, L, rc);
    CHECK(cells.cells_per_side() == 5);
    std::vector<double> dx(d);
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::set<std::size_t> got, want;
      cells.for_each_neighbor(i, [&](std::size_t j, std::span<const double>, double) {
        CHECK(got.insert(j).second);
      });
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (j == i) continue;
        displacement(s.positions[i], s.positions[j], L, dx);
        if (squared_norm(dx) < rc * rc) want.insert(j);
      }
      CHECK(got == want);
    }
  }
}

TEST_CASE("spatial hash candidates cover every close pair") {
  RngStream rng(15, 0);
  auto s = random_state(200, 2, rng, 1.0);
  const double cell = 0.3;
  SpatialHash grid(s.positions, cell);
  std::vector<double> to(2);
  for (int k = 0; k < 50; ++k) {
    const std::size_t i = rng.index(200);
    to[0] = s.positions[i][0] + 0.5 * rng.normal();
    to[1] = s.positions[i][1] + 0.5 * rng.normal();
    grid.move(i, s.positions[i], to);
    s.positions[i][0] = to[0];
    s.positions[i][1] = to[1];
  }
  std::vector<double> dx(2);
  for (std::size_t i = 0; i < 200; ++i) {
    std::set<std::size_t> cand;
    grid.for_each_candidate(s.positions[i], i, [&](std::size_t j) { cand.insert(j); });
    for (std::size_t j = 0; j < 200; ++j) {
      if (j == i) continue;
      displacement(s.positions[i], s.positions[j], std::nullopt, dx);
      if (squared_norm(dx) < cell * cell) CHECK(cand.count(j) == 1);
    }
  }
}

TEST_CASE("singular kernels are clamped and counted") {
  auto s = line_state({0.0, 0.0, 1.0});
  PairForce pf(kernels::inverse_1d(), s);
  std::vector<double> acc(1, 0.0);
  pf.accumulate(0, 1, acc);
  CHECK(pf.clamps() == 1);
  CHECK(std::isfinite(acc[0]));
  CHECK(std::abs(acc[0]) == doctest::Approx(1.0 / pf.clamp_radius()));
  pf.accumulate(0, 2, acc);
  CHECK(pf.clamps() == 1);
}

TEST_CASE("split kernel reconstructs the full kernel") {
  const double r0 = 0.5;
  auto k = kernels::lennard_jones(1.0, 0.3, r0);
  RngStream rng(16, 0);
  std::vector<double> x(3), full(3), a(3), b(3);
  for (int t = 0; t < 2000; ++t) {
    const double r = 0.25 + 1.5 * rng.uniform();
    double nrm = 0;
    for (double& v : x) {
      v = rng.normal();
      nrm += v * v;
    }
    for (double& v : x) v *= r / std::sqrt(nrm);
    k.force(x, full);
    k.short_part(x, a);
    k.smooth_part(x, b);
    for (int c = 0; c < 3; ++c) {
      CHECK(std::abs(full[c] - a[c] - b[c]) <= 1e-12 * (1 + std::abs(full[c])));
      if (r >= r0) CHECK(a[c] == 0.0);
    }
  }
}
