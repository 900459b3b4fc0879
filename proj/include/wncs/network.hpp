#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wncs/rng.hpp"

namespace wncs {

/// N x M success probabilities, every entry in (0, 1].
class LinkQualityMatrix {
 public:
  LinkQualityMatrix() = default;
  /// Throws Error(kInvalidArgument) if any entry is outside (0, 1].
  explicit LinkQualityMatrix(Eigen::MatrixXd q);

  const Eigen::MatrixXd& matrix() const { return q_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return q_(i, j); }
  Eigen::Index subsystems() const { return q_.rows(); }
  Eigen::Index channels() const { return q_.cols(); }

 private:
  Eigen::MatrixXd q_;
};

struct Assignment {
  int subsystem;
  int channel;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Subsystem-to-channel pairing for one slot. At most one subsystem per
/// channel and one channel per subsystem.
class Allocation {
 public:
  Allocation() = default;

  /// Throws Error(kInvalidAllocation) if either index is already used.
  void assign(int subsystem, int channel);

  const std::vector<Assignment>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::optional<int> channel_of(int subsystem) const;
  std::optional<int> subsystem_on(int channel) const;

  /// Sum of weights(i, j) over the pairs, in ascending subsystem order.
  double value(const Eigen::MatrixXd& weights) const;

  /// Pairs sorted by subsystem index.
  std::vector<Assignment> sorted() const;

  /// Throws Error(kInvalidAllocation) unless indices are in range and both
  /// one-per-row and one-per-column constraints hold.
  void validate(Eigen::Index subsystems, Eigen::Index channels) const;

  friend bool operator==(const Allocation& a, const Allocation& b) { return a.sorted() == b.sorted(); }

 private:
  std::vector<Assignment> pairs_;
};

/// Per-slot channel outcomes.
struct TransmissionOutcome {
  std::vector<bool> gamma;  ///< Aligned with Allocation::pairs().
  std::vector<bool> theta;  ///< Per subsystem: packet delivered this slot.
};

/// tau(i, j) = lambda / cost(i, j). Throws on nonpositive or non-finite costs.
Eigen::MatrixXd compute_timers(const Eigen::MatrixXd& costs, double lambda);

/// Virtual-time sweep of the timer contention. Timers expire in increasing
/// order; an expiring timer claims its channel if both the subsystem and the
/// channel are still free, and the claim silences that subsystem's other
/// timers and that channel's other contenders. Ties are broken by `tie_rank`
/// (smaller first) when given, then by subsystem index, then channel index.
Allocation resolve_contention(const Eigen::MatrixXd& tau, const Eigen::MatrixXd* tie_rank = nullptr);

/// Bernoulli draw per allocated pair. The draw for link (i, j) at `slot` comes
/// from substream (kLink, i, j) at counter `slot`, independent of the policy.
TransmissionOutcome transmit(const Allocation& allocation, const LinkQualityMatrix& q,
                             const CounterRng& rng, std::uint64_t slot);

/// Channel outcome that transmit() would report for link (i, j) at `slot`.
bool link_success(const LinkQualityMatrix& q, const CounterRng& rng, int subsystem, int channel,
                  std::uint64_t slot);

}  // namespace wncs
