#include "wncs/stability.hpp"

#include <chrono>
#include <memory>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "wncs/coil.hpp"
#include "wncs/error.hpp"
#include "wncs/mat.hpp"
#include "wncs/network.hpp"

namespace wncs {

namespace {

long tuple_code(std::span<const int> tuple, int m_bar) {
  long code = 0;
  for (auto it = tuple.rbegin(); it != tuple.rend(); ++it) code = code * (m_bar + 1) + std::min(*it, m_bar);
  return code;
}

}  // namespace

long ChainModel::index_of(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != subsystems) return -1;
  return lookup[static_cast<std::size_t>(tuple_code(tuple, m_bar))];
}

ChainPolicy coil_timer_policy(std::span<const SubsystemModel> models, const Eigen::VectorXd& q) {
  auto tables = std::make_shared<std::vector<CoilTable>>();
  for (const auto& m : models) tables->emplace_back(m);
  return [tables, q](std::span<const int> ages) {
    Eigen::MatrixXd w(q.size(), 1);
    long long floors = 0;
    for (Eigen::Index i = 0; i < q.size(); ++i) w(i, 0) = timer_priority((*tables)[i].coil(ages[i]) * q(i), floors);
    return resolve_contention(compute_timers(w, 1.0)).pairs().front().subsystem;
  };
}

ChainModel build_chain(std::span<const SubsystemModel> models, const Eigen::VectorXd& q, int m_bar,
                       const ChainPolicy& policy) {
  const int n = static_cast<int>(models.size());
  if (n < 1 || q.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "one single-channel link quality per subsystem is required", "q");
  }
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!(q(i) > 0.0 && q(i) <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "q outside (0, 1]", "q");
  }
  if (m_bar < 1) throw Error(ErrorCode::kInvalidArgument, "m_bar must be at least 1", "m_bar");
  const double full = std::pow(static_cast<double>(m_bar + 1), n);
  if (n > 3 || full > 2e5) {
    std::ostringstream os;
    os << "age chain with N = " << n << ", m_bar = " << m_bar << " has " << full
       << " states; limits are N <= 3 and 2e5 states";
    throw Error(ErrorCode::kTooLarge, os.str());
  }
  const ChainPolicy rule = policy ? policy : coil_timer_policy(models, q);

  ChainModel chain;
  chain.subsystems = n;
  chain.m_bar = m_bar;
  const long total = static_cast<long>(full);
  chain.lookup.assign(static_cast<std::size_t>(total), -1);
  std::vector<int> tuple(static_cast<std::size_t>(n), 0);
  long next_index = 0;
  for (long code = 0; code < total; ++code) {
    long c = code;
    bool all_zero = true;
    for (int i = 0; i < n; ++i) {
      tuple[i] = static_cast<int>(c % (m_bar + 1));
      c /= (m_bar + 1);
      all_zero = all_zero && tuple[i] == 0;
    }
    if (n >= 2 && all_zero) continue;
    chain.lookup[static_cast<std::size_t>(code)] = next_index++;
    chain.ages.insert(chain.ages.end(), tuple.begin(), tuple.end());
  }

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(2 * next_index));
  chain.winner.resize(static_cast<std::size_t>(next_index));
  std::vector<int> succ(static_cast<std::size_t>(n));
  for (long s = 0; s < next_index; ++s) {
    const auto cur = chain.state(s);
    const int w = rule(cur);
    if (w < 0 || w >= n) throw Error(ErrorCode::kInvalidArgument, "policy returned an out-of-range winner");
    chain.winner[static_cast<std::size_t>(s)] = w;
    for (int i = 0; i < n; ++i) succ[i] = std::min(cur[i] + 1, m_bar);
    const long miss = chain.index_of(succ);
    succ[w] = 0;
    const long hit = chain.index_of(succ);
    entries.emplace_back(s, hit, q(w));
    if (q(w) < 1.0) entries.emplace_back(s, miss, 1.0 - q(w));
  }
  chain.T.resize(next_index, next_index);
  chain.T.setFromTriplets(entries.begin(), entries.end());
  chain.T.makeCompressed();
  return chain;
}

Eigen::VectorXd power_iteration(const ChainModel& chain, double tol, int max_iterations, int* iterations) {
  const Eigen::Index n = chain.states();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const Eigen::SparseMatrix<double> Tt = chain.T.transpose();
  int it = 0;
  for (; it < max_iterations; ++it) {
    Eigen::VectorXd next = Tt * pi;
    next /= next.sum();
    const double change = (next - pi).lpNorm<Eigen::Infinity>();
    pi = std::move(next);
    if (change < tol) break;
  }
  if (iterations) *iterations = it;
  return pi;
}

StationaryResult stationary_distribution(const ChainModel& chain, Eigen::Index dense_limit) {
  const Eigen::Index n = chain.states();
  StationaryResult out;
  bool solved = false;
  if (n <= dense_limit) {
    Eigen::MatrixXd M = Eigen::MatrixXd(chain.T);
    M.diagonal().array() -= 1.0;
    M.array() += 1.0;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M.transpose());
    const double rcond = lu.rcond();
    if (std::isfinite(rcond) && rcond > 1e-14) {
      out.pi = lu.solve(Eigen::VectorXd::Ones(n));
      out.method = "closed-form";
      solved = out.pi.allFinite();
    }
  } else {
    // (T - I)^T with its last row replaced by the normalization sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(chain.T.nonZeros() + 2 * n));
    for (Eigen::Index s = 0; s < n; ++s) {
      for (decltype(chain.T)::InnerIterator it(chain.T, s); it; ++it) {
        if (it.col() != n - 1) entries.emplace_back(it.col(), s, it.value());
      }
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != n - 1) entries.emplace_back(k, k, -1.0);
      entries.emplace_back(n - 1, k, 1.0);
    }
    Eigen::SparseMatrix<double> M(n, n);
    M.setFromTriplets(entries.begin(), entries.end());
    M.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() == Eigen::Success) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
      rhs(n - 1) = 1.0;
      out.pi = lu.solve(rhs);
      out.method = "normalized-sparse-lu";
      solved = lu.info() == Eigen::Success && out.pi.allFinite();
    }
  }

  const Eigen::VectorXd power = power_iteration(chain, 1e-15, 1000000, &out.power_iterations);
  if (!solved) {
    out.warnings.push_back("stationary system is singular; using power iteration");
    out.pi = power;
    out.method = "power-iteration";
  }
  // Round-off can leave entries like -1e-19.
  out.pi = out.pi.cwiseMax(0.0);
  out.pi /= out.pi.sum();
  out.power_agreement = (out.pi - power).lpNorm<Eigen::Infinity>();
  const Eigen::RowVectorXd piT = out.pi.transpose() * chain.T;
  out.residual = (piT.transpose() - out.pi).lpNorm<Eigen::Infinity>();
  return out;
}

Eigen::VectorXd marginal_age_distribution(const ChainModel& chain, const Eigen::VectorXd& pi, int subsystem) {
  if (subsystem < 0 || subsystem >= chain.subsystems || pi.size() != chain.states()) {
    throw Error(ErrorCode::kDimensionMismatch, "subsystem index or pi size does not match the chain");
  }
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(chain.m_bar + 1);
  for (Eigen::Index s = 0; s < chain.states(); ++s) mu(chain.state(s)[subsystem]) += pi(s);
  return mu;
}

StabilityVerdict check_stability(const Eigen::VectorXd& mu, const Eigen::MatrixXd& A, const StabilityParams& params) {
  const int m_bar = static_cast<int>(mu.size()) - 1;
  if (!(params.beta > 0.0) || !(params.p > 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "p-series test needs beta > 0 and p > 1", "beta");
  }
  if (params.t0 < 1 || params.t0 >= m_bar) {
    throw Error(ErrorCode::kInvalidArgument, "t0 must satisfy 1 <= t0 < m_bar", "t0");
  }
  StabilityVerdict v;
  v.sigma_max = spectral_radius(A);
  v.norm_A = spectral_norm(A);
  v.tail_mass = mu(m_bar);
  v.window_begin = params.t0;
  v.window_end = m_bar - 1;

  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  for (int t = 0; t <= m_bar; ++t) {
    const double norm = spectral_norm(power);
    v.series_norm.push_back(mu(t) * norm * norm);
    v.series_radius.push_back(mu(t) * std::pow(v.sigma_max, 2.0 * t));
    v.bound.push_back(t == 0 ? std::numeric_limits<double>::infinity() : params.beta / std::pow(t, params.p));
    power = A * power;
  }
  const auto& s = params.measure == GrowthMeasure::kSpectralRadius ? v.series_radius : v.series_norm;
  for (int t = v.window_begin; t <= v.window_end; ++t) {
    if (v.first_bound_violation < 0 && s[t] > v.bound[t]) v.first_bound_violation = t;
    if (v.first_increase < 0 && t < v.window_end && s[t + 1] > s[t]) v.first_increase = t;
  }
  v.certified = v.first_bound_violation < 0 && v.first_increase < 0;

  // Geometric decay of the untruncated part of the tail.
  const int hi = m_bar - 1;
  const int lo = std::max(params.t0, hi - 10);
  if (hi > lo && mu(lo) > 0.0 && mu(hi) > 0.0) {
    v.decay_ratio = std::pow(mu(hi) / mu(lo), 1.0 / (hi - lo));
    v.root_test = v.decay_ratio < 1.0 / (v.sigma_max * v.sigma_max);
  }

  std::ostringstream os;
  if (v.certified) {
    os << "s(t) is nonincreasing and below beta/t^p on [" << v.window_begin << ", " << v.window_end << "]";
  } else {
    if (v.first_bound_violation >= 0) os << "s(t) exceeds beta/t^p at t = " << v.first_bound_violation;
    if (v.first_bound_violation >= 0 && v.first_increase >= 0) os << "; ";
    if (v.first_increase >= 0) os << "s(t) increases at t = " << v.first_increase;
  }
  v.reason = os.str();
  return v;
}

Eigen::MatrixXd expected_limit_covariance(const Eigen::VectorXd& mu, const SubsystemModel& model) {
  Eigen::MatrixXd P = model.P_bar();
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(P.rows(), P.cols());
  for (Eigen::Index t = 0; t < mu.size(); ++t) {
    total += mu(t) * P;
    P = h_map(model.A(), model.W(), P);
  }
  return symmetrize(total);
}

StabilityAnalysis analyze_stability(std::span<const SubsystemModel> models, const Eigen::VectorXd& q, int m_bar,
                                    const StabilityParams& params) {
  const auto start = std::chrono::steady_clock::now();
  StabilityAnalysis out;
  out.chain = build_chain(models, q, m_bar);
  out.stationary = stationary_distribution(out.chain);
  out.certified = true;
  for (int i = 0; i < static_cast<int>(models.size()); ++i) {
    out.mu.push_back(marginal_age_distribution(out.chain, out.stationary.pi, i));
    out.verdicts.push_back(check_stability(out.mu.back(), models[i].A(), params));
    out.limit_covariance.push_back(expected_limit_covariance(out.mu.back(), models[i]));
    out.certified = out.certified && out.verdicts.back().certified;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace wncs
