#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rbm/ewald.hpp"
#include "rbm/state.hpp"

namespace rbm {

/// Weighted point cloud; empty weights mean uniform.
struct EmpiricalMeasure {
  Points samples;
  std::vector<double> weights;

  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(Points s, std::vector<double> w = {});
  /// One-dimensional measure from raw values.
  static EmpiricalMeasure from_values(std::span<const double> values);

  std::size_t size() const noexcept { return samples.size(); }
  double weight(std::size_t i) const;
  /// Nonnegative weights summing to 1 within 1e-12.
  void validate() const;
};

/// Fixed-range histogram; samples outside [lo, hi) are counted separately.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> counts;
  double outside = 0.0;

  static Histogram uniform(double lo, double hi, std::size_t bins);
  void add(double x, double weight = 1.0);
  void add(std::span<const double> xs);

  std::size_t bins() const noexcept { return counts.size(); }
  double center(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
  double total_inside() const;
  /// Normalised so that sum density * width = 1 over the binned range.
  std::vector<double> density() const;
  /// Density at x by the bin that contains it (0 outside the range).
  double density_at(double x) const;

  /// "lo,hi,count,density" rows.
  void write_csv(std::ostream& os) const;
};

using Cdf = std::function<double(double)>;

/// W1 between two one-dimensional measures: integral of |F_a - F_b|.
double wasserstein1_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

/// W1 between samples and an analytic CDF whose mass lies in [lo, hi]
/// (F(lo) ~ 0, F(hi) ~ 1). Quadrature on the samples plus a uniform grid.
double wasserstein1_1d(std::span<const double> a, const Cdf& cdf, double lo, double hi,
                       std::size_t grid = 4096);

struct StrongError {
  std::vector<double> per_time;
  double sup = 0.0;
};

/// sqrt(mean over replicas and particles of |a - b|^2) at each recorded time.
/// Indexed as traj[replica][time].
StrongError strong_error(const std::vector<std::vector<Points>>& a,
                         const std::vector<std::vector<Points>>& b);
/// Phase-space version: sqrt(E|r_a - r_b|^2 + E|v_a - v_b|^2).
StrongError strong_error(const std::vector<std::vector<ParticleState>>& a,
                         const std::vector<std::vector<ParticleState>>& b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope x + intercept.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct RadialChargeRow {
  double r;          // bin centre
  double rho;        // screening charge density
  double log_r_rho;  // ln(r rho), NaN when rho <= 0
  std::size_t pairs;
};

/// Time-averaged screening charge density around cations (minus the net charge
/// density, so positive for a screened ion), radially binned with the minimum
/// image. With include_anions the anion-centred density is added with its sign
/// flipped (the same quantity for a symmetric electrolyte).
class RadialChargeAccumulator {
 public:
  RadialChargeAccumulator(double r_max, double bin_width, bool include_anions = false);

  void accumulate(const PeriodicChargeSystem& sys);
  /// Adds one neighbour at distance r contributing q to the screening density.
  void add_pair(double r, double q);
  /// Registers centres (and the volume they sample) without neighbours.
  void add_centres(std::size_t count);

  std::vector<RadialChargeRow> table() const;
  /// Fit of ln(r rho) against r over bins with centre in [lo, hi] and rho > 0.
  LinearFit fit(double lo = 0.5, double hi = 2.5) const;

  std::size_t frames() const noexcept { return frames_; }
  std::size_t total_pairs() const noexcept { return total_pairs_; }
  std::size_t centres() const noexcept { return centres_; }

  /// "r,rho,log_r_rho,pairs" rows.
  void write_csv(std::ostream& os) const;

 private:
  double r_max_, width_;
  bool anions_;
  std::vector<double> charge_;
  std::vector<std::size_t> pairs_;
  std::size_t frames_ = 0, centres_ = 0, total_pairs_ = 0;
};

enum class BenchMethod { direct, rbm };

struct ScalingRow {
  std::size_t n;
  double seconds_per_step;
  std::size_t steps;
};

struct BenchOptions {
  std::size_t p = 2;
  double dt = 1e-3;
  double min_seconds = 0.25;  // per size, repeat steps until this much time elapsed
  std::size_t repeats = 3;    // fastest repeat is reported
  std::uint64_t seed = 1;
};

/// Wall-clock per step of a first-order toy system (b = -x, Gaussian kernel,
/// d = 1, mean-field coupling) for each N. Repeats cycle over all sizes, in
/// alternating order, and the fastest repeat of each size is reported.
std::vector<ScalingRow> scaling_benchmark(BenchMethod method, std::span<const std::size_t> sizes,
                                          const BenchOptions& opt = {});

std::string to_string(BenchMethod m);

}  // namespace rbm
