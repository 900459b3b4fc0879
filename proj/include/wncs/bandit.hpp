#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wncs/coil.hpp"
#include "wncs/network.hpp"
#include "wncs/rng.hpp"

namespace wncs {

/// One subsystem's view of its channels: plays and successes per arm.
/// Statistics are never shared between subsystems.
class BanditState {
 public:
  /// Bounds of the index perturbation; requires -1 < lo <= hi < 1.
  BanditState(int channels, double epsilon_lo = -0.5, double epsilon_hi = 0.5);

  int channels() const { return static_cast<int>(plays_.size()); }
  long long plays(int j) const { return plays_[j]; }
  long long rewards(int j) const { return rewards_[j]; }
  long long total_plays() const { return total_; }
  /// R_j / z_j; zero for an unplayed arm.
  double mean_reward(int j) const;
  double epsilon_lo() const { return lo_; }
  double epsilon_hi() const { return hi_; }
  bool warmed_up() const;

  /// Records one transmission on arm j with binary reward gamma.
  void reward_update(int j, bool gamma);

 private:
  std::vector<long long> plays_;
  std::vector<long long> rewards_;
  long long total_ = 0;
  double lo_;
  double hi_;
};

/// Perturbed UCB1 index r_j + sqrt(2 ln z / (z_j + epsilon)).
/// Throws Error(kInvalidArgument) if arm j has never been played.
double ucb_index(const BanditState& state, int j, double epsilon);

/// Source of per-channel success estimates used in the timers. Implementations
/// must depend only on the subsystem's own state.
class ChannelIndex {
 public:
  virtual ~ChannelIndex() = default;
  virtual double index(int subsystem, const BanditState& state, int channel, double epsilon) const = 0;
};

/// The perturbed UCB1 index.
class PerturbedUcb1 final : public ChannelIndex {
 public:
  double index(int, const BanditState& state, int channel, double epsilon) const override {
    return ucb_index(state, channel, epsilon);
  }
};

/// Returns the true link qualities; turns Algorithm 1 into the known-q
/// timer policy. Used for equivalence checks.
class KnownQuality final : public ChannelIndex {
 public:
  explicit KnownQuality(LinkQualityMatrix q) : q_(std::move(q)) {}
  double index(int subsystem, const BanditState&, int channel, double) const override {
    return q_(subsystem, channel);
  }

 private:
  LinkQualityMatrix q_;
};

/// Seeded random order over all N*M (subsystem, channel) pairs, one pair per
/// slot, so every arm of every subsystem is played once.
std::vector<Assignment> warmup_schedule(int subsystems, int channels, const CounterRng& rng);

/// Epsilon for subsystem i, channel j, slot k: substream (kEpsilon, i) at
/// counter k * M + j, uniform on the state's bounds.
double draw_epsilon(const BanditState& state, const CounterRng& rng, int subsystem, int channel,
                    std::uint64_t slot);

struct Algorithm1Step {
  Allocation allocation;
  TransmissionOutcome outcome;
  std::vector<std::optional<int>> chosen;  ///< I_{i,k}; empty for losers.
  Eigen::MatrixXd qhat;                    ///< Indices used in the timers.
};

struct Algorithm1Options {
  double lambda = 1.0;
  /// When false the timers use the index alone (lambda / qhat).
  bool weight_by_coil = true;
  /// When false epsilon is fixed at zero.
  bool perturb = true;
};

/// One slot of the distributed learning policy: draw epsilons, form indices,
/// set timers lambda / (CoIL * qhat), run the contention, transmit on the true
/// links, and update the winners' statistics. `floor_events` counts CoIL
/// values floored before the timer division.
Algorithm1Step algorithm1_step(std::span<BanditState> states, std::span<CoilTable> tables,
                               std::span<const int> ages, const LinkQualityMatrix& q,
                               const ChannelIndex& index, const CounterRng& rng, std::uint64_t slot,
                               const Algorithm1Options& opts, long long& floor_events);

}  // namespace wncs
