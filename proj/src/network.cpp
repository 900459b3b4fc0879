#include "wncs/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "wncs/error.hpp"

namespace wncs {

LinkQualityMatrix::LinkQualityMatrix(Eigen::MatrixXd q) : q_(std::move(q)) {
  for (Eigen::Index i = 0; i < q_.rows(); ++i) {
    for (Eigen::Index j = 0; j < q_.cols(); ++j) {
      const double v = q_(i, j);
      if (!(v > 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "link quality q[" << i << "][" << j << "] = " << v << " is outside (0, 1]";
        throw Error(ErrorCode::kInvalidArgument, os.str(), "q");
      }
    }
  }
}

void Allocation::assign(int subsystem, int channel) {
  if (channel_of(subsystem)) {
    throw Error(ErrorCode::kInvalidAllocation,
                "subsystem " + std::to_string(subsystem) + " already holds a channel");
  }
  if (subsystem_on(channel)) {
    throw Error(ErrorCode::kInvalidAllocation, "channel " + std::to_string(channel) + " already claimed");
  }
  pairs_.push_back({subsystem, channel});
}

std::optional<int> Allocation::channel_of(int subsystem) const {
  for (const auto& p : pairs_) {
    if (p.subsystem == subsystem) return p.channel;
  }
  return std::nullopt;
}

std::optional<int> Allocation::subsystem_on(int channel) const {
  for (const auto& p : pairs_) {
    if (p.channel == channel) return p.subsystem;
  }
  return std::nullopt;
}

std::vector<Assignment> Allocation::sorted() const {
  auto out = pairs_;
  std::sort(out.begin(), out.end(),
            [](const Assignment& a, const Assignment& b) { return a.subsystem < b.subsystem; });
  return out;
}

double Allocation::value(const Eigen::MatrixXd& weights) const {
  double v = 0.0;
  for (const auto& p : sorted()) v += weights(p.subsystem, p.channel);
  return v;
}

void Allocation::validate(Eigen::Index subsystems, Eigen::Index channels) const {
  std::vector<char> row(static_cast<std::size_t>(subsystems), 0);
  std::vector<char> col(static_cast<std::size_t>(channels), 0);
  for (const auto& p : pairs_) {
    if (p.subsystem < 0 || p.subsystem >= subsystems || p.channel < 0 || p.channel >= channels) {
      throw Error(ErrorCode::kInvalidAllocation, "allocation index out of range");
    }
    if (row[p.subsystem]++ || col[p.channel]++) {
      throw Error(ErrorCode::kInvalidAllocation, "allocation violates a one-per-subsystem/one-per-channel constraint");
    }
  }
}

Eigen::MatrixXd compute_timers(const Eigen::MatrixXd& costs, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be positive and finite", "lambda");
  }
  if (!costs.allFinite() || (costs.array() <= 0.0).any()) {
    throw Error(ErrorCode::kDegeneratePriority, "timer costs must be positive and finite", "costs");
  }
  return lambda / costs.array();
}

Allocation resolve_contention(const Eigen::MatrixXd& tau, const Eigen::MatrixXd* tie_rank) {
  const auto n = tau.rows();
  const auto m = tau.cols();
  if (tie_rank && (tie_rank->rows() != n || tie_rank->cols() != m)) {
    throw Error(ErrorCode::kDimensionMismatch, "tie_rank must match tau", "tie_rank");
  }
  std::vector<Assignment> order;
  order.reserve(static_cast<std::size_t>(n * m));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) order.push_back({i, j});
  }
  const auto key = [&](const Assignment& a) {
    return std::tuple(tau(a.subsystem, a.channel), tie_rank ? (*tie_rank)(a.subsystem, a.channel) : 0.0,
                      a.subsystem, a.channel);
  };
  std::sort(order.begin(), order.end(), [&](const Assignment& a, const Assignment& b) { return key(a) < key(b); });

  Allocation alloc;
  std::vector<char> subsystem_done(static_cast<std::size_t>(n), 0);
  std::vector<char> channel_taken(static_cast<std::size_t>(m), 0);
  const auto limit = static_cast<std::size_t>(std::min(n, m));
  for (const auto& a : order) {
    if (alloc.size() == limit) break;
    if (subsystem_done[a.subsystem] || channel_taken[a.channel]) continue;
    alloc.assign(a.subsystem, a.channel);
    subsystem_done[a.subsystem] = 1;
    channel_taken[a.channel] = 1;
  }
  return alloc;
}

bool link_success(const LinkQualityMatrix& q, const CounterRng& rng, int subsystem, int channel,
                  std::uint64_t slot) {
  const double u = rng.uniform(
      {StreamRole::kLink, static_cast<std::uint32_t>(subsystem), static_cast<std::uint32_t>(channel)}, slot);
  return u < q(subsystem, channel);
}

TransmissionOutcome transmit(const Allocation& allocation, const LinkQualityMatrix& q,
                             const CounterRng& rng, std::uint64_t slot) {
  allocation.validate(q.subsystems(), q.channels());
  TransmissionOutcome out;
  out.theta.assign(static_cast<std::size_t>(q.subsystems()), false);
  out.gamma.reserve(allocation.size());
  for (const auto& p : allocation.pairs()) {
    const bool ok = link_success(q, rng, p.subsystem, p.channel, slot);
    out.gamma.push_back(ok);
    if (ok) out.theta[p.subsystem] = true;
  }
  return out;
}

}  // namespace wncs
