#pragma once

#include <cstddef>
#include <vector>

#include "rbm/rng.hpp"

namespace rbm {

/// A random partition of {0, ..., N-1} into batches.
///
/// When p divides N every batch has exactly p members. Otherwise the last
/// batch holds the N mod p leftovers (if at least two), or absorbs a single
/// leftover particle and grows to p + 1.
struct BatchDivision {
  std::vector<std::size_t> assignment;            // particle -> batch
  std::vector<std::vector<std::size_t>> batches;  // members, ascending
  std::size_t batch_size = 0;

  std::size_t num_batches() const noexcept { return batches.size(); }
  std::size_t num_particles() const noexcept { return assignment.size(); }
};

/// Uniformly random division via a Durstenfeld shuffle. O(N).
BatchDivision random_division(std::size_t n, std::size_t p, RngStream& rng);

/// Builds a division from an explicit permutation: consecutive runs of p
/// entries form the batches (same remainder rule as random_division).
BatchDivision division_from_permutation(const std::vector<std::size_t>& perm,
                                        std::size_t p);

/// p distinct indices drawn uniformly from {0, ..., N-1}, ascending.
/// Successive calls are independent, so a particle may recur across calls.
std::vector<std::size_t> sample_batch_with_replacement(std::size_t n, std::size_t p,
                                                       RngStream& rng);

}  // namespace rbm
