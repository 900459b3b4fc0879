#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "wncs/plant.hpp"

namespace wncs {

/// Maps the age tuple at the end of a slot to the subsystem that wins the
/// single channel in the next slot.
using ChainPolicy = std::function<int(std::span<const int> ages)>;

/// Truncated age chain for N loops sharing one channel.
///
/// States are age tuples in [0, m_bar]^N. A miss at age m_bar stays at m_bar,
/// which keeps every row exactly stochastic. For N >= 2 the all-zero tuple is
/// unreachable after the first slot and is left out.
struct ChainModel {
  int subsystems = 0;
  int m_bar = 0;
  std::vector<int> ages;      ///< Row-major, subsystems entries per state.
  std::vector<int> winner;    ///< Policy action per state.
  std::vector<long> lookup;   ///< Tuple code -> state index, -1 if excluded.
  Eigen::SparseMatrix<double, Eigen::RowMajor> T;

  Eigen::Index states() const { return T.rows(); }
  std::span<const int> state(Eigen::Index s) const {
    return {ages.data() + s * subsystems, static_cast<std::size_t>(subsystems)};
  }
  /// State index of an age tuple (each entry clamped to m_bar), or -1.
  long index_of(std::span<const int> tuple) const;
};

/// The timer rule on CoIL(age) * q for one channel; ties go to the lower
/// index. Matches the known-q policy of the simulator.
ChainPolicy coil_timer_policy(std::span<const SubsystemModel> models, const Eigen::VectorXd& q);

/// Builds the chain. Guards: N <= 3 and (m_bar + 1)^N <= 2e5; q entries in
/// (0, 1]. The default policy is coil_timer_policy.
ChainModel build_chain(std::span<const SubsystemModel> models, const Eigen::VectorXd& q, int m_bar,
                       const ChainPolicy& policy = {});

struct StationaryResult {
  Eigen::VectorXd pi;
  double residual = 0.0;          ///< ||pi T - pi||_inf
  double power_agreement = 0.0;   ///< ||pi - pi_power||_inf
  int power_iterations = 0;
  std::string method;             ///< "closed-form", "normalized-sparse-lu" or "power-iteration"
  std::vector<std::string> warnings;
};

/// pi = 1^T (T - I + D)^{-1} with D the all-ones matrix, solved densely for
/// chains up to `dense_limit` states. Larger chains use the equivalent
/// system pi (T - I) = 0, pi 1 = 1 with a sparse LU. Either way pi is
/// cross-checked against power iteration; a singular system falls back to
/// the power-iteration vector with a warning.
StationaryResult stationary_distribution(const ChainModel& chain, Eigen::Index dense_limit = 6000);

/// Power iteration pi <- pi T from the uniform vector.
Eigen::VectorXd power_iteration(const ChainModel& chain, double tol = 1e-15, int max_iterations = 1000000,
                                int* iterations = nullptr);

/// mu_i(t) = sum of pi over states whose i-th age is t, t in [0, m_bar].
Eigen::VectorXd marginal_age_distribution(const ChainModel& chain, const Eigen::VectorXd& pi, int subsystem);

enum class GrowthMeasure {
  kSpectralRadius,  ///< mu(t) sigma_max(A)^{2t}
  kNormOfPower,     ///< mu(t) ||A^t||_2^2
};

struct StabilityParams {
  double beta = 100.0;
  double p = 2.0;
  int t0 = 4;
  GrowthMeasure measure = GrowthMeasure::kSpectralRadius;
};

struct StabilityVerdict {
  bool certified = false;
  std::vector<double> series_radius;  ///< mu(t) sigma_max(A)^{2t}
  std::vector<double> series_norm;    ///< mu(t) ||A^t||^2
  std::vector<double> bound;          ///< beta / t^p (t = 0 entry is +inf)
  int first_bound_violation = -1;     ///< Smallest t in the checked window with s(t) > bound.
  int first_increase = -1;            ///< Smallest t with s(t + 1) > s(t) in the window.
  int window_begin = 0;
  int window_end = 0;                 ///< Inclusive; m_bar - 1.
  double sigma_max = 0.0;             ///< Spectral radius of A.
  double norm_A = 0.0;
  double tail_mass = 0.0;             ///< mu(m_bar), the saturated bin.
  double decay_ratio = 0.0;           ///< Tail estimate of lim mu(t)^{1/t}.
  bool root_test = false;             ///< decay_ratio < 1 / sigma_max^2.
  std::string reason;
};

/// p-series test on s(t) = mu(t) g(t): certified iff s(t) <= beta / t^p and
/// s is nonincreasing for every t in [t0, m_bar - 1]. The saturated bin
/// t = m_bar aggregates the truncated tail and is excluded from the window.
StabilityVerdict check_stability(const Eigen::VectorXd& mu, const Eigen::MatrixXd& A,
                                 const StabilityParams& params = {});

/// sum_t mu(t) h^t(P_bar) over t in [0, mu.size() - 1].
Eigen::MatrixXd expected_limit_covariance(const Eigen::VectorXd& mu, const SubsystemModel& model);

struct StabilityAnalysis {
  ChainModel chain;
  StationaryResult stationary;
  std::vector<Eigen::VectorXd> mu;
  std::vector<StabilityVerdict> verdicts;
  std::vector<Eigen::MatrixXd> limit_covariance;
  bool certified = false;  ///< Every subsystem certified.
  double seconds = 0.0;
};

/// build_chain + stationary_distribution + marginals + check_stability for
/// every subsystem.
StabilityAnalysis analyze_stability(std::span<const SubsystemModel> models, const Eigen::VectorXd& q, int m_bar,
                                    const StabilityParams& params = {});

}  // namespace wncs
