#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace rbm {

/// Independent random stream labelled by (seed, stream_id).
///
/// Identical labels give bit-identical draw sequences; distinct labels are
/// decorrelated through a seed_seq built from both words.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  double uniform();                      // [0, 1)
  double normal();                       // N(0, 1)
  std::size_t index(std::size_t n);      // uniform on {0, ..., n-1}
  bool bernoulli(double prob);

  /// A child stream whose label mixes this stream's label with `id`.
  RngStream substream(std::uint64_t id) const;

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// The logical streams one simulation replica consumes. Batch divisions,
/// Brownian increments and thermostat collisions never share a generator.
struct Streams {
  RngStream division;
  RngStream noise;
  RngStream thermostat;
  RngStream init;

  static Streams for_replica(std::uint64_t seed, std::uint64_t replica = 0);
};

}  // namespace rbm
