#include "rbm/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rbm/integrators.hpp"
#include "rbm/kernel.hpp"

namespace rbm {

// --- EmpiricalMeasure ------------------------------------------------------

EmpiricalMeasure::EmpiricalMeasure(Points s, std::vector<double> w)
    : samples(std::move(s)), weights(std::move(w)) {
  validate();
}

EmpiricalMeasure EmpiricalMeasure::from_values(std::span<const double> values) {
  return EmpiricalMeasure(Points(values.size(), 1, std::vector<double>(values.begin(), values.end())));
}

double EmpiricalMeasure::weight(std::size_t i) const {
  return weights.empty() ? 1.0 / static_cast<double>(samples.size()) : weights[i];
}

void EmpiricalMeasure::validate() const {
  if (weights.empty()) return;
  if (weights.size() != samples.size()) {
    throw std::invalid_argument("one weight per sample is required");
  }
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to 1");
}

// --- Histogram -------------------------------------------------------------

Histogram Histogram::uniform(double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw std::invalid_argument("histogram needs lo < hi and bins > 0");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  }
  h.counts.assign(bins, 0.0);
  return h;
}

void Histogram::add(double x, double weight) {
  if (!(x >= edges.front() && x < edges.back())) {
    outside += weight;
    return;
  }
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto b = static_cast<std::size_t>(it - edges.begin()) - 1;
  counts[std::min(b, counts.size() - 1)] += weight;
}

void Histogram::add(std::span<const double> xs) {
  for (double x : xs) add(x);
}

double Histogram::total_inside() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

std::vector<double> Histogram::density() const {
  const double total = total_inside();
  std::vector<double> d(counts.size(), 0.0);
  if (total <= 0.0) return d;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    d[b] = counts[b] / (total * (edges[b + 1] - edges[b]));
  }
  return d;
}

double Histogram::density_at(double x) const {
  if (!(x >= edges.front() && x < edges.back())) return 0.0;
  const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) -
                                          edges.begin()) - 1;
  return density()[std::min(b, counts.size() - 1)];
}

void Histogram::write_csv(std::ostream& os) const {
  const auto d = density();
  os << "lo,hi,count,density\n";
  for (std::size_t b = 0; b < counts.size(); ++b) {
    os << edges[b] << ',' << edges[b + 1] << ',' << counts[b] << ',' << d[b] << '\n';
  }
}

// --- Wasserstein -----------------------------------------------------------

namespace {

void require_1d(const EmpiricalMeasure& m) {
  if (m.samples.dim() != 1) throw std::invalid_argument("W1 is implemented for d = 1 only");
  if (m.size() == 0) throw std::invalid_argument("W1 needs nonempty measures");
  m.validate();
}

}  // namespace

double wasserstein1_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require_1d(a);
  require_1d(b);
  struct Atom {
    double x, w;
  };
  std::vector<Atom> atoms;
  atoms.reserve(a.size() + b.size());
  for (std::size_t i = 0; i < a.size(); ++i) atoms.push_back({a.samples[i][0], a.weight(i)});
  for (std::size_t i = 0; i < b.size(); ++i) atoms.push_back({b.samples[i][0], -b.weight(i)});
  std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.x < r.x; });
  // F_a - F_b is piecewise constant between consecutive atoms
  double diff = 0.0, w1 = 0.0;
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
    diff += atoms[k].w;
    w1 += std::abs(diff) * (atoms[k + 1].x - atoms[k].x);
  }
  return w1;
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  return wasserstein1_1d(EmpiricalMeasure::from_values(a), EmpiricalMeasure::from_values(b));
}

double wasserstein1_1d(std::span<const double> a, const Cdf& cdf, double lo, double hi,
                       std::size_t grid) {
  if (a.empty()) throw std::invalid_argument("W1 needs a nonempty sample");
  if (!(hi > lo)) throw std::invalid_argument("W1 quadrature range needs lo < hi");
  std::vector<double> xs(a.begin(), a.end());
  std::sort(xs.begin(), xs.end());
  lo = std::min(lo, xs.front());
  hi = std::max(hi, xs.back());

  std::vector<double> nodes;
  nodes.reserve(xs.size() + grid + 1);
  for (std::size_t g = 0; g <= grid; ++g) {
    nodes.push_back(lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid));
  }
  nodes.insert(nodes.end(), xs.begin(), xs.end());
  std::sort(nodes.begin(), nodes.end());

  // 3-point Gauss-Legendre on every interval of the merged grid
  static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double m = static_cast<double>(xs.size());
  std::size_t below = 0;
  double w1 = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double x0 = nodes[k], x1 = nodes[k + 1];
    while (below < xs.size() && xs[below] <= x0) ++below;
    if (x1 <= x0) continue;
    const double fa = static_cast<double>(below) / m;
    const double mid = 0.5 * (x0 + x1), half = 0.5 * (x1 - x0);
    double s = 0.0;
    for (int q = 0; q < 3; ++q) s += gw[q] * std::abs(fa - cdf(mid + half * gx[q]));
    w1 += half * s;
  }
  return w1;
}

// --- Strong error ----------------------------------------------------------

namespace {

template <class T, class SqDiff>
StrongError strong_error_impl(const std::vector<std::vector<T>>& a,
                              const std::vector<std::vector<T>>& b, SqDiff sqdiff) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("strong error needs the same nonzero number of replicas");
  }
  const std::size_t times = a.front().size();
  StrongError out;
  out.per_time.assign(times, 0.0);
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r].size() != times || b[r].size() != times) {
      throw std::invalid_argument("all replicas must record the same times");
    }
  }
  for (std::size_t t = 0; t < times; ++t) {
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < a.size(); ++r) s += sqdiff(a[r][t], b[r][t], count);
    out.per_time[t] = std::sqrt(s / static_cast<double>(count));
    out.sup = std::max(out.sup, out.per_time[t]);
  }
  return out;
}

double points_sqdiff(const Points& x, const Points& y) {
  if (x.size() != y.size() || x.dim() != y.dim()) {
    throw std::invalid_argument("trajectories must have matching shapes");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < x.flat().size(); ++k) {
    const double d = x.flat()[k] - y.flat()[k];
    s += d * d;
  }
  return s;
}

}  // namespace

StrongError strong_error(const std::vector<std::vector<Points>>& a,
                         const std::vector<std::vector<Points>>& b) {
  return strong_error_impl(a, b, [](const Points& x, const Points& y, std::size_t& count) {
    count += x.size();
    return points_sqdiff(x, y);
  });
}

StrongError strong_error(const std::vector<std::vector<ParticleState>>& a,
                         const std::vector<std::vector<ParticleState>>& b) {
  return strong_error_impl(
      a, b, [](const ParticleState& x, const ParticleState& y, std::size_t& count) {
        count += x.size();
        double s = points_sqdiff(x.positions, y.positions);
        if (x.velocities.has_value() != y.velocities.has_value()) {
          throw std::invalid_argument("trajectories disagree on velocities");
        }
        if (x.velocities) s += points_sqdiff(*x.velocities, *y.velocities);
        return s;
      });
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least squares needs at least two (x, y) pairs");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least squares needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = x.size();
  return f;
}

// --- Radial net charge -----------------------------------------------------

RadialChargeAccumulator::RadialChargeAccumulator(double r_max, double bin_width,
                                                 bool include_anions)
    : r_max_(r_max), width_(bin_width), anions_(include_anions) {
  if (!(r_max > 0.0) || !(bin_width > 0.0) || bin_width > r_max) {
    throw std::invalid_argument("radial histogram needs 0 < bin width <= r_max");
  }
  const auto bins = static_cast<std::size_t>(std::ceil(r_max / bin_width - 1e-12));
  charge_.assign(bins, 0.0);
  pairs_.assign(bins, 0);
}

void RadialChargeAccumulator::add_pair(double r, double q) {
  if (!(r >= 0.0) || r >= r_max_) return;
  const auto b = std::min(static_cast<std::size_t>(r / width_), charge_.size() - 1);
  charge_[b] += q;
  ++pairs_[b];
  ++total_pairs_;
}

void RadialChargeAccumulator::add_centres(std::size_t count) { centres_ += count; }

void RadialChargeAccumulator::accumulate(const PeriodicChargeSystem& sys) {
  sys.validate();
  const double L = sys.box();
  if (r_max_ > 0.5 * L) throw std::invalid_argument("r_max must not exceed L/2");
  const Points& x = sys.state.positions;
  const std::optional<double> box = L;
  std::vector<double> dx(3);
  const double rmax2 = r_max_ * r_max_;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    // screening density: charge opposite to the centre counts positive
    double sign;
    if (sys.charges[i] > 0.0) {
      sign = -1.0;
    } else if (anions_ && sys.charges[i] < 0.0) {
      sign = 1.0;
    } else {
      continue;
    }
    ++centres_;
    for (std::size_t j = 0; j < sys.size(); ++j) {
      if (j == i) continue;
      displacement(x[i], x[j], box, dx);
      const double r2 = squared_norm(dx);
      if (r2 < rmax2) add_pair(std::sqrt(r2), sign * sys.charges[j]);
    }
  }
  ++frames_;
}

std::vector<RadialChargeRow> RadialChargeAccumulator::table() const {
  std::vector<RadialChargeRow> rows;
  rows.reserve(charge_.size());
  for (std::size_t b = 0; b < charge_.size(); ++b) {
    const double r0 = static_cast<double>(b) * width_;
    const double r1 = std::min(r0 + width_, r_max_);
    const double shell = 4.0 / 3.0 * std::numbers::pi * (r1 * r1 * r1 - r0 * r0 * r0);
    const double rho = centres_ == 0 ? 0.0 : charge_[b] / (static_cast<double>(centres_) * shell);
    const double r = 0.5 * (r0 + r1);
    rows.push_back({r, rho, rho > 0.0 ? std::log(r * rho) : std::numeric_limits<double>::quiet_NaN(),
                    pairs_[b]});
  }
  return rows;
}

LinearFit RadialChargeAccumulator::fit(double lo, double hi) const {
  std::vector<double> xs, ys;
  for (const auto& row : table()) {
    if (row.r >= lo && row.r <= hi && row.rho > 0.0) {
      xs.push_back(row.r);
      ys.push_back(row.log_r_rho);
    }
  }
  return least_squares(xs, ys);
}

void RadialChargeAccumulator::write_csv(std::ostream& os) const {
  os << "r,rho,log_r_rho,pairs\n";
  for (const auto& row : table()) {
    os << row.r << ',' << row.rho << ',' << row.log_r_rho << ',' << row.pairs << '\n';
  }
}

// --- Scaling benchmark -----------------------------------------------------

std::string to_string(BenchMethod m) { return m == BenchMethod::direct ? "direct" : "rbm"; }

std::vector<ScalingRow> scaling_benchmark(BenchMethod method, std::span<const std::size_t> sizes,
                                          const BenchOptions& opt) {
  using clock = std::chrono::steady_clock;
  struct Case {
    FirstOrderSystem sys;
    Streams rng;
    ParticleState state;
    double best = std::numeric_limits<double>::infinity();
    std::size_t steps = 0;
  };
  std::vector<Case> cases;
  cases.reserve(sizes.size());
  for (std::size_t n : sizes) {
    if (n < 2) throw std::invalid_argument("benchmark sizes must be >= 2");
    FirstOrderSystem sys;
    sys.drift = [](std::span<const double> x, std::span<double> o) { o[0] = -x[0]; };
    sys.kernel = kernels::gaussian(1.0);
    sys.alpha_n = 1.0 / static_cast<double>(n - 1);
    sys.sigma = 0.5;
    Streams rng = Streams::for_replica(opt.seed, n);
    Points x(n, 1);
    for (double& v : x.flat()) v = rng.init.normal();
    cases.push_back({std::move(sys), rng, ParticleState(std::move(x))});
  }
  auto step = [&](Case& c) {
    c.state = method == BenchMethod::direct ? direct_step(c.state, c.sys, opt.dt, c.rng)
                                            : rbm_step_first_order(c.state, c.sys, opt.p, opt.dt, c.rng);
  };
  for (auto& c : cases) step(c);  // warm-up

  // Round-robin over sizes so that a slow spell of the machine hits every N.
  // The order flips on every repeat so no size is always timed last.
  for (std::size_t r = 0; r < std::max<std::size_t>(opt.repeats, 1); ++r) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      auto& c = cases[r % 2 ? cases.size() - 1 - i : i];
      std::size_t steps = 0;
      const auto t0 = clock::now();
      double elapsed = 0.0;
      do {
        step(c);
        ++steps;
        elapsed = std::chrono::duration<double>(clock::now() - t0).count();
      } while (elapsed < opt.min_seconds);
      c.best = std::min(c.best, elapsed / static_cast<double>(steps));
      c.steps += steps;
    }
  }
  std::vector<ScalingRow> out;
  for (std::size_t k = 0; k < sizes.size(); ++k) out.push_back({sizes[k], cases[k].best, cases[k].steps});
  return out;
}

}  // namespace rbm
