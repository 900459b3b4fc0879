#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wncs/network.hpp"
#include "wncs/plant.hpp"

namespace wncs {

/// Maximum-weight assignment of subsystems (rows) to channels (columns) by
/// the Hungarian method on a zero-padded square cost matrix. Weights must be
/// finite; rectangular inputs are fine.
Allocation hungarian(const Eigen::MatrixXd& weights);

struct AssignmentResult {
  Allocation allocation;
  double value = 0.0;
};

/// Exhaustive maximum over every constraint-respecting matching, including
/// partial ones. Throws Error(kTooLarge) past 10^7 candidate matchings.
AssignmentResult brute_force_assignment(const Eigen::MatrixXd& weights);

/// Number of matchings brute_force_assignment would enumerate.
double matching_count(Eigen::Index subsystems, Eigen::Index channels);

/// One channel, finite horizon. schedule[k] is the subsystem holding the
/// channel in step k, or -1 for an idle slot.
struct Schedule {
  std::vector<int> slots;
  double cost = 0.0;
};

/// Sum over the horizon of sum_i tr(Gamma_i P_i,k) under the expected
/// covariance recursion P_k = d q P_bar + (1 - d q) h(P_{k-1}), starting from
/// P = h^{t_i}(P_bar) for the given ages.
double evaluate_schedule(std::span<const SubsystemModel> models, std::span<const int> ages,
                         const Eigen::VectorXd& q, std::span<const int> schedule);

/// Exact single-channel finite-horizon optimum by enumerating all (N+1)^K
/// schedules. Guards: K <= 6, N <= 4. The first minimum found (in
/// lexicographic schedule order with idle = -1 first) is returned.
Schedule miocp_enumerate(std::span<const SubsystemModel> models, std::span<const int> ages,
                         const Eigen::VectorXd& q, int horizon);

/// Greedy schedule that, step by step on the same recursion, hands the
/// channel to argmax_i q_i tr(Gamma_i [h(P_i) - P_bar_i]).
Schedule myopic_schedule(std::span<const SubsystemModel> models, std::span<const int> ages,
                         const Eigen::VectorXd& q, int horizon);

}  // namespace wncs
