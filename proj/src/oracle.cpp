#include "wncs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wncs/error.hpp"
#include "wncs/mat.hpp"

namespace wncs {

Allocation hungarian(const Eigen::MatrixXd& weights) {
  if (!weights.allFinite()) throw Error(ErrorCode::kInvalidArgument, "weights must be finite", "weights");
  const Eigen::Index rows = weights.rows();
  const Eigen::Index cols = weights.cols();
  Allocation alloc;
  if (rows == 0 || cols == 0) return alloc;

  // Minimize (max - w) on an n x n matrix; padded cells cost `max`, i.e.
  // weight zero.
  const Eigen::Index n = std::max(rows, cols);
  const double top = std::max(0.0, weights.maxCoeff());
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, top);
  cost.topLeftCorner(rows, cols) = top - weights.array();

  // Shortest augmenting path with potentials, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = match[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (Eigen::Index j = 1; j <= n; ++j) {
    const Eigen::Index i = match[j] - 1;
    if (i < rows && j - 1 < cols) alloc.assign(static_cast<int>(i), static_cast<int>(j - 1));
  }
  return alloc;
}

double matching_count(Eigen::Index subsystems, Eigen::Index channels) {
  // sum_k C(N, k) * M! / (M - k)!
  double total = 0.0;
  double choose = 1.0;
  double perm = 1.0;
  for (Eigen::Index k = 0; k <= std::min(subsystems, channels); ++k) {
    if (k > 0) {
      choose = choose * static_cast<double>(subsystems - k + 1) / static_cast<double>(k);
      perm *= static_cast<double>(channels - k + 1);
    }
    total += choose * perm;
  }
  return total;
}

namespace {

struct Search {
  const Eigen::MatrixXd& w;
  std::vector<int> choice;
  std::vector<char> taken;
  std::vector<int> best_choice;
  double best = -std::numeric_limits<double>::infinity();

  void run(int i) {
    if (i == w.rows()) {
      double value = 0.0;
      for (int r = 0; r < w.rows(); ++r) {
        if (choice[r] >= 0) value += w(r, choice[r]);
      }
      if (value > best) {
        best = value;
        best_choice = choice;
      }
      return;
    }
    choice[i] = -1;
    run(i + 1);
    for (int j = 0; j < w.cols(); ++j) {
      if (taken[j]) continue;
      taken[j] = 1;
      choice[i] = j;
      run(i + 1);
      taken[j] = 0;
    }
    choice[i] = -1;
  }
};

}  // namespace

AssignmentResult brute_force_assignment(const Eigen::MatrixXd& weights) {
  if (!weights.allFinite()) throw Error(ErrorCode::kInvalidArgument, "weights must be finite", "weights");
  const double count = matching_count(weights.rows(), weights.cols());
  if (count > 1e7) {
    std::ostringstream os;
    os << "brute-force assignment would enumerate " << count << " matchings (limit 1e7)";
    throw Error(ErrorCode::kTooLarge, os.str(), "weights");
  }
  Search s{weights, std::vector<int>(weights.rows(), -1), std::vector<char>(weights.cols(), 0), {}};
  s.run(0);
  AssignmentResult out;
  for (int i = 0; i < weights.rows(); ++i) {
    if (s.best_choice[i] >= 0) out.allocation.assign(i, s.best_choice[i]);
  }
  out.value = out.allocation.value(weights);
  return out;
}

namespace {

void check_miocp_inputs(std::span<const SubsystemModel> models, std::span<const int> ages,
                        const Eigen::VectorXd& q, int horizon) {
  if (models.size() != ages.size() || static_cast<Eigen::Index>(models.size()) != q.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "models, ages and q must have one entry per subsystem");
  }
  if (horizon < 1) throw Error(ErrorCode::kInvalidArgument, "horizon must be at least 1", "horizon");
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!(q(i) > 0.0 && q(i) <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "q outside (0, 1]", "q");
  }
}

}  // namespace

double evaluate_schedule(std::span<const SubsystemModel> models, std::span<const int> ages,
                         const Eigen::VectorXd& q, std::span<const int> schedule) {
  check_miocp_inputs(models, ages, q, static_cast<int>(schedule.size()));
  std::vector<Eigen::MatrixXd> P;
  for (std::size_t i = 0; i < models.size(); ++i) P.push_back(models[i].covariance_at_age(ages[i]));
  double cost = 0.0;
  for (int who : schedule) {
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto& m = models[i];
      const double d = (static_cast<int>(i) == who) ? q(static_cast<Eigen::Index>(i)) : 0.0;
      P[i] = d * m.P_bar() + (1.0 - d) * h_map(m.A(), m.W(), P[i]);
      cost += (m.Gamma() * P[i]).trace();
    }
  }
  return cost;
}

Schedule miocp_enumerate(std::span<const SubsystemModel> models, std::span<const int> ages,
                         const Eigen::VectorXd& q, int horizon) {
  check_miocp_inputs(models, ages, q, horizon);
  if (horizon > 6 || models.size() > 4) {
    throw Error(ErrorCode::kTooLarge, "MIOCP enumeration is limited to K <= 6 and N <= 4");
  }
  const int options = static_cast<int>(models.size()) + 1;
  long long total = 1;
  for (int k = 0; k < horizon; ++k) total *= options;

  Schedule best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<int> sched(static_cast<std::size_t>(horizon));
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    for (int k = horizon - 1; k >= 0; --k) {
      sched[k] = static_cast<int>(c % options) - 1;
      c /= options;
    }
    const double cost = evaluate_schedule(models, ages, q, sched);
    if (cost < best.cost) {
      best.cost = cost;
      best.slots = sched;
    }
  }
  return best;
}

Schedule myopic_schedule(std::span<const SubsystemModel> models, std::span<const int> ages,
                         const Eigen::VectorXd& q, int horizon) {
  check_miocp_inputs(models, ages, q, horizon);
  std::vector<Eigen::MatrixXd> P;
  for (std::size_t i = 0; i < models.size(); ++i) P.push_back(models[i].covariance_at_age(ages[i]));
  Schedule out;
  for (int k = 0; k < horizon; ++k) {
    int winner = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto& m = models[i];
      const double gain =
          q(static_cast<Eigen::Index>(i)) * (m.Gamma() * (h_map(m.A(), m.W(), P[i]) - m.P_bar())).trace();
      if (gain > best) {
        best = gain;
        winner = static_cast<int>(i);
      }
    }
    out.slots.push_back(winner);
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto& m = models[i];
      const double d = (static_cast<int>(i) == winner) ? q(static_cast<Eigen::Index>(i)) : 0.0;
      P[i] = d * m.P_bar() + (1.0 - d) * h_map(m.A(), m.W(), P[i]);
    }
  }
  out.cost = evaluate_schedule(models, ages, q, out.slots);
  return out;
}

}  // namespace wncs
