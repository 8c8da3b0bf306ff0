#include "rbm/svgd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rbm/batching.hpp"

namespace rbm {

SvgdKernel SvgdKernel::gaussian(double h) {
  if (!(h > 0.0)) throw std::invalid_argument("SVGD kernel bandwidth must be positive");
  SvgdKernel k;
  k.value = [h](std::span<const double> x, std::span<const double> y) {
    double r2 = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) r2 += (x[c] - y[c]) * (x[c] - y[c]);
    return std::exp(-r2 / h);
  };
  k.grad_y = [h](std::span<const double> x, std::span<const double> y, std::span<double> out) {
    double r2 = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) r2 += (x[c] - y[c]) * (x[c] - y[c]);
    const double e = 2.0 / h * std::exp(-r2 / h);
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = e * (x[c] - y[c]);
  };
  return k;
}

namespace {

// acc += grad_y K(x_i, x_j) - K(x_i, x_j) g_j
void add_pair(const SvgdKernel& k, std::span<const double> xi, std::span<const double> xj,
              std::span<const double> gj, std::span<double> acc, std::span<double> tmp) {
  const double kv = k.value(xi, xj);
  k.grad_y(xi, xj, tmp);
  for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += tmp[c] - kv * gj[c];
}

Points scores(const SvgdState& s) {
  Points g(s.particles.size(), s.particles.dim());
  for (std::size_t j = 0; j < g.size(); ++j) s.grad_v(s.particles[j], g[j]);
  return g;
}

void check_state(const SvgdState& s) {
  if (!s.kernel.value || !s.kernel.grad_y) throw std::invalid_argument("SVGD kernel is incomplete");
  if (!s.grad_v) throw std::invalid_argument("SVGD needs the score grad V");
  if (s.particles.empty()) throw std::invalid_argument("SVGD needs at least one particle");
}

// division == nullptr: full batch with weight 1/N on the off-diagonal sum.
Points velocities_impl(const SvgdState& s, const BatchDivision* division) {
  check_state(s);
  const std::size_t n = s.particles.size(), d = s.particles.dim();
  const Points g = scores(s);
  const double inv_n = 1.0 / static_cast<double>(n);
  Points v(n, d);
  std::vector<double> self(d), acc(d), tmp(d);

  auto update = [&](std::size_t i, std::span<const std::size_t> members, double scale) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j : members) {
      if (j != i) add_pair(s.kernel, s.particles[i], s.particles[j], g[j], acc, tmp);
    }
    std::fill(self.begin(), self.end(), 0.0);
    add_pair(s.kernel, s.particles[i], s.particles[i], g[i], self, tmp);
    auto vi = v[i];
    for (std::size_t c = 0; c < d; ++c) vi[c] = inv_n * self[c] + scale * acc[c];
  };

  if (!division) {
    std::vector<std::size_t> all(n);
    for (std::size_t j = 0; j < n; ++j) all[j] = j;
    for (std::size_t i = 0; i < n; ++i) update(i, all, inv_n);
    return v;
  }
  if (division->num_particles() != n) {
    throw std::invalid_argument("division does not match the particle count");
  }
  for (const auto& batch : division->batches) {
    // (N-1)/(N(p-1)); equals 1/N exactly when the batch is everything
    const double scale =
        inv_n * (static_cast<double>(n - 1) / static_cast<double>(batch.size() - 1));
    for (std::size_t i : batch) update(i, batch, scale);
  }
  return v;
}

}  // namespace

Points svgd_velocities(const SvgdState& s, std::size_t batch_size, RngStream* rng) {
  const std::size_t n = s.particles.size();
  if (batch_size >= n || n == 1) return velocities_impl(s, nullptr);
  if (!rng) throw std::invalid_argument("random batches need an RNG stream");
  const BatchDivision div = random_division(n, batch_size, *rng);
  return velocities_impl(s, &div);
}

Points svgd_velocities(const SvgdState& s, const BatchDivision& division) {
  return velocities_impl(s, &division);
}

std::vector<double> svgd_velocity(std::size_t i, const SvgdState& s) {
  if (i >= s.particles.size()) throw std::out_of_range("particle index out of range");
  const Points v = svgd_velocities(s, s.particles.size(), nullptr);
  return {v[i].begin(), v[i].end()};
}

SvgdSchedule SvgdSchedule::constant(double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("SVGD step must be >= 0");
  return {Kind::constant, eta, 0.0};
}

SvgdSchedule SvgdSchedule::inverse(double eta, double k0) {
  if (!(eta > 0.0) || !(k0 >= 0.0)) throw std::invalid_argument("inverse schedule needs eta > 0, k0 >= 0");
  return {Kind::inverse, eta, k0};
}

SvgdSchedule SvgdSchedule::adagrad(double eta, double eps) {
  if (!(eta > 0.0) || !(eps > 0.0)) throw std::invalid_argument("AdaGrad needs eta, eps > 0");
  return {Kind::adagrad, eta, eps};
}

void SvgdSchedule::apply(Points& x, const Points& v, std::size_t k) {
  if (k == 0) throw std::invalid_argument("schedules are indexed from k = 1");
  auto& xf = x.flat();
  const auto& vf = v.flat();
  switch (kind_) {
    case Kind::constant:
    case Kind::inverse: {
      const double eta = kind_ == Kind::constant ? eta_ : eta_ / (static_cast<double>(k) + aux_);
      for (std::size_t a = 0; a < xf.size(); ++a) xf[a] += eta * vf[a];
      break;
    }
    case Kind::adagrad: {
      if (accum_.size() != xf.size()) accum_.assign(xf.size(), 0.0);
      for (std::size_t a = 0; a < xf.size(); ++a) {
        accum_[a] += vf[a] * vf[a];
        xf[a] += eta_ / std::sqrt(aux_ + accum_[a]) * vf[a];
      }
      break;
    }
  }
}

namespace {

void guard(const Points& x) {
  for (double a : x.flat()) {
    if (!std::isfinite(a) || std::abs(a) > svgd_divergence_limit) {
      throw NumericalError(
          "SVGD diverged (|x| > 1e6 or non-finite); reduce the step size or use a decaying "
          "schedule such as inverse or adagrad");
    }
  }
}

}  // namespace

void rbm_svgd_step(SvgdState& s, std::size_t p, double eta, RngStream& rng) {
  if (p < 2) throw std::invalid_argument("batch size must be >= 2 (got " + std::to_string(p) + ")");
  if (eta == 0.0) return;
  const Points v = svgd_velocities(s, p, &rng);
  auto& x = s.particles.flat();
  for (std::size_t a = 0; a < x.size(); ++a) x[a] += eta * v.flat()[a];
  guard(s.particles);
}

void rbm_svgd_step(SvgdState& s, std::size_t p, SvgdSchedule& schedule, std::size_t k,
                   RngStream& rng) {
  if (p < 2) throw std::invalid_argument("batch size must be >= 2 (got " + std::to_string(p) + ")");
  const Points v = svgd_velocities(s, p, &rng);
  schedule.apply(s.particles, v, k);
  guard(s.particles);
}

}  // namespace rbm
