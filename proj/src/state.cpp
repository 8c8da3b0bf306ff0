#include "rbm/state.hpp"

#include <cmath>
#include <sstream>

namespace rbm {

Points::Points(std::size_t n, std::size_t d, std::vector<double> flat)
    : n_(n), d_(d), data_(std::move(flat)) {
  if (data_.size() != n * d) {
    throw std::invalid_argument("Points: flat buffer has " +
                                std::to_string(data_.size()) + " entries, expected " +
                                std::to_string(n * d));
  }
}

bool Points::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Points::fill(double v) {
  for (double& x : data_) x = v;
}

ParticleState::ParticleState(Points pos, std::optional<Points> vel,
                             std::optional<double> box)
    : positions(std::move(pos)), velocities(std::move(vel)), box_length(box) {}

void ParticleState::validate() const {
  if (positions.dim() == 0 && positions.size() > 0) {
    throw std::invalid_argument("ParticleState: zero-dimensional positions");
  }
  if (!positions.all_finite()) {
    throw std::invalid_argument("ParticleState: non-finite positions");
  }
  if (velocities) {
    if (velocities->size() != positions.size() || velocities->dim() != positions.dim()) {
      throw std::invalid_argument("ParticleState: velocities shape differs from positions");
    }
    if (!velocities->all_finite()) {
      throw std::invalid_argument("ParticleState: non-finite velocities");
    }
  }
  if (box_length && !(*box_length > 0.0)) {
    throw std::invalid_argument("ParticleState: box length must be positive");
  }
  if (time < 0.0) throw std::invalid_argument("ParticleState: negative time");
}

void ParticleState::wrap() {
  if (!box_length) return;
  const double L = *box_length;
  for (double& x : positions.flat()) {
    x -= L * std::floor(x / L);
    // floor can round x/L up to exactly 1 for tiny negative x
    if (x >= L) x -= L;
    if (x < 0.0) x = 0.0;
  }
}

void ParticleState::require_finite(const std::string& where) const {
  auto check = [&](const Points& p, const char* what) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (double v : p[i]) {
        if (!std::isfinite(v)) {
          std::ostringstream msg;
          msg << where << ": non-finite " << what << " for particle " << i << " at t=" << time;
          throw NumericalError(msg.str());
        }
      }
    }
  };
  check(positions, "position");
  if (velocities) check(*velocities, "velocity");
}

void displacement(std::span<const double> a, std::span<const double> b,
                  const std::optional<double>& box, std::span<double> out) {
  const std::size_t d = a.size();
  if (box) {
    const double L = *box;
    const double half = 0.5 * L;
    for (std::size_t c = 0; c < d; ++c) {
      double dx = a[c] - b[c];
      if (dx >= half) {
        dx -= L;
      } else if (dx < -half) {
        dx += L;
      }
      // far images (unwrapped input) take the general formula
      if (dx >= half || dx < -half) dx -= L * std::floor((dx + half) / L);
      out[c] = dx;
    }
  } else {
    for (std::size_t c = 0; c < d; ++c) out[c] = a[c] - b[c];
  }
}

double squared_norm(std::span<const double> x) noexcept {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace rbm
