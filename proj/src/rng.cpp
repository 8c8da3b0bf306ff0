#include "rbm/rng.hpp"

namespace rbm {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x5bd1e995u};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::normal() { return normal_(engine_); }

std::size_t RngStream::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

bool RngStream::bernoulli(double prob) { return uniform() < prob; }

RngStream RngStream::substream(std::uint64_t id) const {
  // splitmix64 finaliser over the combined label
  std::uint64_t z = stream_id_ * 0x9e3779b97f4a7c15ULL + id + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return RngStream(seed_, z);
}

Streams Streams::for_replica(std::uint64_t seed, std::uint64_t replica) {
  const std::uint64_t base = replica * 8;
  return Streams{RngStream(seed, base + 0), RngStream(seed, base + 1),
                 RngStream(seed, base + 2), RngStream(seed, base + 3)};
}

}  // namespace rbm
