#include "wncs/rng.hpp"

#include <cmath>
#include <numbers>

namespace wncs {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t stream_key(std::uint64_t seed, StreamId id) noexcept {
  std::uint64_t k = splitmix64(seed ^ (static_cast<std::uint64_t>(id.role) * kGolden));
  k = splitmix64(k ^ (static_cast<std::uint64_t>(id.a) + 0x632BE59BD9B4E019ULL));
  k = splitmix64(k ^ (static_cast<std::uint64_t>(id.b) + 0x85157AF5ULL));
  return k;
}
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::bits(StreamId id, std::uint64_t counter) const noexcept {
  return splitmix64(stream_key(seed_, id) + (counter + 1) * kGolden);
}

double CounterRng::uniform(StreamId id, std::uint64_t counter) const noexcept {
  return static_cast<double>(bits(id, counter) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(StreamId id, std::uint64_t counter) const noexcept {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform(id, 2 * counter);
  const double u2 = uniform(id, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd CounterRng::normal_vector(StreamId id, std::uint64_t first, Eigen::Index n) const {
  Eigen::VectorXd z(n);
  for (Eigen::Index c = 0; c < n; ++c) z(c) = normal(id, first + static_cast<std::uint64_t>(c));
  return z;
}

}  // namespace wncs
