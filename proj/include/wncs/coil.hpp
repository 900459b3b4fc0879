#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wncs/network.hpp"
#include "wncs/plant.hpp"

namespace wncs {

/// Priorities below this are floored before dividing into a timer.
inline constexpr double kCoilFloor = 1e-12;

/// Cost of information loss: tr(Gamma [h^{t_prev+1}(P_bar) - P_bar]), the
/// increase in expected stage cost if the loop misses its packet this slot
/// given age `t_prev` at the end of the previous slot. Computed from scratch.
/// Throws Error(kDegeneratePriority) if the value is not positive.
double coil_value(const SubsystemModel& model, int t_prev);

/// Per-subsystem cache of h^t(P_bar) and the traces derived from it. Owned by
/// one run; grows lazily as larger ages are queried.
///
/// Once h^t(P_bar) stops being finite (a diverging loop) the cache saturates:
/// queries beyond the last finite age return the last finite values, and
/// saturated() reports it.
class CoilTable {
 public:
  explicit CoilTable(const SubsystemModel& model);

  const SubsystemModel& model() const { return *model_; }

  /// h^t(P_bar).
  const Eigen::MatrixXd& covariance(int t);
  /// tr(Gamma h^{t_prev+1}(P_bar)), expected Gamma-cost if the packet is lost.
  double miss_cost(int t_prev);
  /// tr(Gamma P_bar), the Gamma-cost after a delivery.
  double hit_cost() const { return hit_cost_; }
  /// miss_cost - hit_cost. Not floored; may be zero for degenerate models.
  double coil(int t_prev) { return miss_cost(t_prev) - hit_cost_; }
  /// tr(Pi W).
  double noise_cost() const { return noise_cost_; }

  bool saturated() const { return saturated_; }

 private:
  int extend_to(int t);

  const SubsystemModel* model_;
  std::vector<Eigen::MatrixXd> cov_;
  std::vector<double> gamma_trace_;
  double hit_cost_;
  double noise_cost_;
  bool saturated_ = false;
};

/// max(coil, kCoilFloor); counts the floorings in `floor_events`.
double timer_priority(double coil, long long& floor_events);

/// Expected stage cost at the start of a slot given previous-slot ages:
/// sum_i tr(Pi_i W_i + Gamma_i h^{t_i+1}(P_bar_i)) - sum_{(i,j) allocated} CoIL_i q_ij.
/// Throws Error(kInvalidAllocation) if the allocation breaks a constraint.
double expected_stage_cost(std::span<CoilTable> tables, std::span<const int> ages,
                           const Allocation& allocation, const LinkQualityMatrix& q);

/// Same, recomputing everything from the models.
double expected_stage_cost(std::span<const SubsystemModel> models, std::span<const int> ages,
                           const Allocation& allocation, const LinkQualityMatrix& q);

/// N x M matrix of CoIL_i * w(i, j).
Eigen::MatrixXd coil_weighted(std::span<CoilTable> tables, std::span<const int> ages,
                              const Eigen::MatrixXd& w);

}  // namespace wncs
