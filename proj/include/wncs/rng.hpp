#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace wncs {

/// What a stream of random numbers is used for. Each role gets its own
/// substream so that adding a consumer never shifts another consumer's draws.
enum class StreamRole : std::uint32_t {
  kProcessNoise = 1,
  kMeasurementNoise = 2,
  kInitialState = 3,
  kLink = 4,
  kEpsilon = 5,
  kWarmup = 6,
  kTieBreak = 7,
  kConfig = 8,
  kTest = 99,
};

/// Address of a substream: role plus up to two indices (subsystem, channel).
struct StreamId {
  StreamRole role;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
};

/// Counter-based generator. Every draw is a pure function of
/// (master seed, stream id, counter); there is no hidden state, so draws can
/// be taken in any order and from any thread with identical results.
///
/// Derivation: key = mix(mix(mix(seed ^ role) ^ a) ^ b), and draw n of that
/// stream is mix(key + (n + 1) * golden), where mix is the SplitMix64
/// finalizer. Simulations use the slot index as the counter (scaled by the
/// number of values consumed per slot).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t bits(StreamId id, std::uint64_t counter) const noexcept;

  /// Uniform on [0, 1).
  double uniform(StreamId id, std::uint64_t counter) const noexcept;

  /// Uniform on [lo, hi).
  double uniform(StreamId id, std::uint64_t counter, double lo, double hi) const noexcept {
    return lo + (hi - lo) * uniform(id, counter);
  }

  /// Standard normal via Box-Muller; consumes counters 2n and 2n+1.
  double normal(StreamId id, std::uint64_t counter) const noexcept;

  /// `n` independent standard normals at counters [first, first + n).
  Eigen::VectorXd normal_vector(StreamId id, std::uint64_t first, Eigen::Index n) const;

 private:
  std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace wncs
