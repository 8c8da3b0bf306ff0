#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "rbm/kernel.hpp"
#include "rbm/state.hpp"

namespace rbm {

/// Linked-cell neighbour search in a periodic cube, cell edge >= cutoff.
/// Rebuilt from scratch for each configuration. With fewer than three cells
/// per side it degrades to an all-pairs minimum-image scan.
class CellList {
 public:
  CellList(const Points& positions, double box_length, double cutoff);

  double cutoff() const noexcept { return cutoff_; }
  std::size_t cells_per_side() const noexcept { return m_; }

  /// Calls f(j, dx, r2) for every j != i with |dx| < cutoff, where
  /// dx = r_i - r_j under the minimum image.
  template <class F>
  void for_each_neighbor(std::size_t i, F&& f) const;

 private:
  std::size_t cell_of(std::span<const double> x) const;

  const Points* pos_;
  double L_;
  double cutoff_;
  std::size_t d_;
  std::size_t m_;  // cells per side, 0 => brute force
  std::vector<std::size_t> head_;
  std::vector<std::size_t> next_;
  std::vector<std::vector<long>> offsets_;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// alpha_N * sum_{|r_ij| < r0} K1(r_i - r_j) through a cell list.
/// Requires a periodic state and r0 < L/2.
std::vector<double> short_range_force(std::size_t i, const ParticleState& state,
                                      const KernelSpec& kernel, double r0, double alpha_n);

/// Hashed uniform grid on an unbounded domain (d <= 3), supporting O(1)
/// moves. Used where particles are updated one at a time.
class SpatialHash {
 public:
  SpatialHash(const Points& positions, double cell);

  void move(std::size_t i, std::span<const double> from, std::span<const double> to);

  /// Calls f(j) for every stored j != skip whose cell neighbours x's cell.
  /// The caller filters by distance.
  template <class F>
  void for_each_candidate(std::span<const double> x, std::size_t skip, F&& f) const;

 private:
  std::int64_t key(std::span<const double> x) const;
  std::int64_t key_of_cell(const long* c) const;

  double cell_;
  std::size_t d_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
};

// ---------------------------------------------------------------------------

template <class F>
void CellList::for_each_neighbor(std::size_t i, F&& f) const {
  const Points& p = *pos_;
  std::vector<double> dx(d_);
  const double rc2 = cutoff_ * cutoff_;
  const std::optional<double> box = L_;
  if (m_ == 0) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j == i) continue;
      displacement(p[i], p[j], box, dx);
      const double r2 = squared_norm(dx);
      if (r2 < rc2) f(j, std::span<const double>(dx), r2);
    }
    return;
  }
  std::vector<long> ci(d_);
  {
    std::size_t c = cell_of(p[i]);
    for (std::size_t k = 0; k < d_; ++k) {
      ci[k] = static_cast<long>(c % m_);
      c /= m_;
    }
  }
  const long m = static_cast<long>(m_);
  for (const auto& off : offsets_) {
    std::size_t flat = 0, stride = 1;
    for (std::size_t k = 0; k < d_; ++k) {
      long c = (ci[k] + off[k]) % m;
      if (c < 0) c += m;
      flat += static_cast<std::size_t>(c) * stride;
      stride *= m_;
    }
    for (std::size_t j = head_[flat]; j != npos; j = next_[j]) {
      if (j == i) continue;
      displacement(p[i], p[j], box, dx);
      const double r2 = squared_norm(dx);
      if (r2 < rc2) f(j, std::span<const double>(dx), r2);
    }
  }
}

template <class F>
void SpatialHash::for_each_candidate(std::span<const double> x, std::size_t skip,
                                     F&& f) const {
  long base[3] = {0, 0, 0};
  for (std::size_t k = 0; k < d_; ++k) base[k] = static_cast<long>(std::floor(x[k] / cell_));
  const long span_hi[3] = {1, d_ > 1 ? 1L : 0L, d_ > 2 ? 1L : 0L};
  long c[3];
  for (long a = -1; a <= 1; ++a) {
    for (long b = -span_hi[1]; b <= span_hi[1]; ++b) {
      for (long e = -span_hi[2]; e <= span_hi[2]; ++e) {
        c[0] = base[0] + a;
        c[1] = base[1] + b;
        c[2] = base[2] + e;
        auto it = buckets_.find(key_of_cell(c));
        if (it == buckets_.end()) continue;
        for (std::size_t j : it->second) {
          if (j != skip) f(j);
        }
      }
    }
  }
}

}  // namespace rbm
