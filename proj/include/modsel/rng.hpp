#pragma once
// Counter-based splittable random stream.
//
// The k-th draw of a stream with key K is splitmix64_mix(K + k * gamma), so a
// stream is fully described by (key, counter). Substreams are derived as
//
//   run key     = mix(master_seed ^ mix(run_index + gamma))
//   stream key  = mix(run_key ^ mix(stream_id * gamma))
//
// with the stream ids listed in `Stream`. Environment randomness and algorithm
// randomness therefore never share a sequence.

#include <cstdint>
#include <limits>

namespace modsel {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
  EnvContexts = 1,
  EnvNoise = 2,
  EnvSetup = 3,
  MasterSampling = 4,
};

class Rng {
 public:
  using result_type = std::uint64_t;

  constexpr Rng() = default;
  constexpr explicit Rng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return mix64(key_ + (++counter_) * kGoldenGamma); }

  /// Independent child stream; does not advance this stream.
  constexpr Rng split(std::uint64_t stream_id) const {
    return Rng(mix64(key_ ^ mix64(stream_id * kGoldenGamma)));
  }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

inline Rng run_stream(std::uint64_t master_seed, std::uint64_t run_index) {
  return Rng(mix64(master_seed ^ mix64(run_index + kGoldenGamma)));
}

inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t run_index, Stream s) {
  return run_stream(master_seed, run_index).split(static_cast<std::uint64_t>(s));
}

/// The substreams one simulation run consumes.
struct RunStreams {
  Rng contexts;
  Rng noise;
  Rng setup;
  Rng sampling;

  static RunStreams derive(std::uint64_t master_seed, std::uint64_t run_index) {
    return {derive_stream(master_seed, run_index, Stream::EnvContexts),
            derive_stream(master_seed, run_index, Stream::EnvNoise),
            derive_stream(master_seed, run_index, Stream::EnvSetup),
            derive_stream(master_seed, run_index, Stream::MasterSampling)};
  }
};

}  // namespace modsel
