#include "rbm/batching.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rbm {

namespace {

void check_batch_size(std::size_t n, std::size_t p) {
  if (p < 2) {
    throw std::invalid_argument("batch size must be >= 2 (got " + std::to_string(p) + ")");
  }
  if (p > n) {
    throw std::invalid_argument("batch size " + std::to_string(p) +
                                " exceeds particle count " + std::to_string(n));
  }
}

}  // namespace

BatchDivision division_from_permutation(const std::vector<std::size_t>& perm,
                                        std::size_t p) {
  const std::size_t n = perm.size();
  check_batch_size(n, p);
  BatchDivision div;
  div.batch_size = p;
  div.assignment.assign(n, 0);

  const std::size_t full = n / p;
  const std::size_t rem = n % p;
  const std::size_t nb = full + (rem >= 2 ? 1 : 0);
  div.batches.resize(nb);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t b = k / p;
    if (b >= nb) b = nb - 1;  // single leftover joins the last batch
    div.batches[b].push_back(perm[k]);
    div.assignment[perm[k]] = b;
  }
  for (auto& batch : div.batches) std::sort(batch.begin(), batch.end());
  return div;
}

BatchDivision random_division(std::size_t n, std::size_t p, RngStream& rng) {
  check_batch_size(n, p);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  return division_from_permutation(perm, p);
}

std::vector<std::size_t> sample_batch_with_replacement(std::size_t n, std::size_t p,
                                                       RngStream& rng) {
  check_batch_size(n, p);
  std::vector<std::size_t> out;
  out.reserve(p);
  if (p == n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  // Floyd's algorithm: p draws, each set uniform over C(n, p)
  for (std::size_t j = n - p; j < n; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rbm
