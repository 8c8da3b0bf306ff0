#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbm {

/// Raised when a step produces NaN/Inf coordinates.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense N x d array of coordinates, row-major.
class Points {
 public:
  Points() = default;
  Points(std::size_t n, std::size_t d, double fill = 0.0)
      : n_(n), d_(d), data_(n * d, fill) {}
  Points(std::size_t n, std::size_t d, std::vector<double> flat);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<double> operator[](std::size_t i) noexcept {
    return {data_.data() + i * d_, d_};
  }
  std::span<const double> operator[](std::size_t i) const noexcept {
    return {data_.data() + i * d_, d_};
  }

  std::vector<double>& flat() noexcept { return data_; }
  const std::vector<double>& flat() const noexcept { return data_; }

  bool all_finite() const noexcept;
  void fill(double v);

  friend bool operator==(const Points&, const Points&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> data_;
};

/// Positions (and optionally velocities) of N particles in d dimensions.
struct ParticleState {
  Points positions;
  std::optional<Points> velocities;
  std::optional<double> box_length;  // periodic cube of side L when set
  double time = 0.0;

  ParticleState() = default;
  explicit ParticleState(Points pos, std::optional<Points> vel = std::nullopt,
                         std::optional<double> box = std::nullopt);

  std::size_t size() const noexcept { return positions.size(); }
  std::size_t dim() const noexcept { return positions.dim(); }
  bool periodic() const noexcept { return box_length.has_value(); }

  /// Throws std::invalid_argument when a structural invariant is broken.
  void validate() const;
  /// Maps every coordinate into [0, L). No-op without a box.
  void wrap();
  /// Throws NumericalError naming the first non-finite particle.
  void require_finite(const std::string& where) const;
};

/// Displacement a - b, wrapped to [-L/2, L/2) per component when periodic.
void displacement(std::span<const double> a, std::span<const double> b,
                  const std::optional<double>& box, std::span<double> out);

double squared_norm(std::span<const double> x) noexcept;

}  // namespace rbm
