#include "rbm/cell_list.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "rbm/forces.hpp"

namespace rbm {

CellList::CellList(const Points& positions, double box_length, double cutoff)
    : pos_(&positions), L_(box_length), cutoff_(cutoff), d_(positions.dim()) {
  if (!(cutoff > 0.0)) throw std::invalid_argument("cell list cutoff must be positive");
  if (!(cutoff < 0.5 * box_length)) {
    throw std::invalid_argument("cutoff " + std::to_string(cutoff) +
                                " must be below half the box length " +
                                std::to_string(0.5 * box_length));
  }
  m_ = static_cast<std::size_t>(std::floor(box_length / cutoff));
  if (m_ < 3 || d_ == 0 || d_ > 3) {
    m_ = 0;
    return;
  }
  std::size_t ncells = 1;
  for (std::size_t k = 0; k < d_; ++k) ncells *= m_;
  head_.assign(ncells, npos);
  next_.assign(positions.size(), npos);
  for (std::size_t i = positions.size(); i-- > 0;) {
    const std::size_t c = cell_of(positions[i]);
    next_[i] = head_[c];
    head_[c] = i;
  }
  // 3^d stencil
  std::size_t total = 1;
  for (std::size_t k = 0; k < d_; ++k) total *= 3;
  offsets_.reserve(total);
  for (std::size_t t = 0; t < total; ++t) {
    std::vector<long> off(d_);
    std::size_t u = t;
    for (std::size_t k = 0; k < d_; ++k) {
      off[k] = static_cast<long>(u % 3) - 1;
      u /= 3;
    }
    offsets_.push_back(std::move(off));
  }
}

std::size_t CellList::cell_of(std::span<const double> x) const {
  std::size_t flat = 0, stride = 1;
  for (std::size_t k = 0; k < d_; ++k) {
    double u = x[k] / L_;
    u -= std::floor(u);
    auto c = static_cast<std::size_t>(u * static_cast<double>(m_));
    if (c >= m_) c = m_ - 1;
    flat += c * stride;
    stride *= m_;
  }
  return flat;
}

std::vector<double> short_range_force(std::size_t i, const ParticleState& state,
                                      const KernelSpec& kernel, double r0, double alpha_n) {
  if (!state.box_length) throw std::invalid_argument("short_range_force needs a periodic box");
  if (i >= state.size()) throw std::out_of_range("particle index out of range");
  CellList cells(state.positions, *state.box_length, r0);
  PairForce pf(kernel, state, kernel.short_part ? KernelPart::short_range : KernelPart::full);
  std::vector<double> acc(state.dim(), 0.0);
  cells.for_each_neighbor(i, [&](std::size_t, std::span<const double> dx, double) {
    pf.accumulate_displacement(dx, acc);
  });
  for (double& v : acc) v *= alpha_n;
  return acc;
}

SpatialHash::SpatialHash(const Points& positions, double cell)
    : cell_(cell), d_(positions.dim()) {
  if (!(cell > 0.0)) throw std::invalid_argument("hash cell size must be positive");
  if (d_ == 0 || d_ > 3) throw std::invalid_argument("SpatialHash supports 1 <= d <= 3");
  for (std::size_t i = 0; i < positions.size(); ++i) buckets_[key(positions[i])].push_back(i);
}

std::int64_t SpatialHash::key_of_cell(const long* c) const {
  constexpr std::int64_t mask = (1LL << 21) - 1;
  constexpr std::int64_t bias = 1LL << 20;
  std::int64_t k = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    k |= ((static_cast<std::int64_t>(c[a]) + bias) & mask) << (21 * a);
  }
  return k;
}

std::int64_t SpatialHash::key(std::span<const double> x) const {
  long c[3] = {0, 0, 0};
  for (std::size_t k = 0; k < d_; ++k) c[k] = static_cast<long>(std::floor(x[k] / cell_));
  return key_of_cell(c);
}

void SpatialHash::move(std::size_t i, std::span<const double> from,
                       std::span<const double> to) {
  const std::int64_t a = key(from);
  const std::int64_t b = key(to);
  if (a == b) return;
  auto& src = buckets_[a];
  auto it = std::find(src.begin(), src.end(), i);
  if (it == src.end()) throw std::logic_error("SpatialHash::move: particle not in its cell");
  *it = src.back();
  src.pop_back();
  if (src.empty()) buckets_.erase(a);
  buckets_[b].push_back(i);
}

}  // namespace rbm
