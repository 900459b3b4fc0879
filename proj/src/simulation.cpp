#include "wncs/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "wncs/bandit.hpp"
#include "wncs/error.hpp"
#include "wncs/oracle.hpp"

namespace wncs {

Scenario::Scenario(const SimConfig& config) : config_(config) {
  validate(config_, false);
  models_.reserve(config_.subsystems.size());
  for (const auto& s : config_.subsystems) models_.emplace_back(s);
  q_ = LinkQualityMatrix(config_.q);
  hash_ = config_hash(config_);
}

RegretTerms regret_terms(std::span<CoilTable> tables, std::span<const int> ages_prev,
                         const Allocation& allocation, const LinkQualityMatrix& q) {
  RegretTerms r;
  r.expected_stage_cost = expected_stage_cost(tables, ages_prev, allocation, q);
  r.regret = hungarian(q.matrix()).value(q.matrix()) - allocation.value(q.matrix());
  const Allocation best = hungarian(coil_weighted(tables, ages_prev, q.matrix()));
  r.cost_regret = r.expected_stage_cost - expected_stage_cost(tables, ages_prev, best, q);
  return r;
}

namespace {

std::vector<CoilTable> make_tables(std::span<const SubsystemModel> models) {
  std::vector<CoilTable> tables;
  tables.reserve(models.size());
  for (const auto& m : models) tables.emplace_back(m);
  return tables;
}

// Allocation by timers on floored weights.
Allocation timer_allocation(const Eigen::MatrixXd& raw, double lambda, long long& floor_events,
                            const Eigen::MatrixXd* tie_rank = nullptr) {
  Eigen::MatrixXd w(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) w(i, j) = timer_priority(raw(i, j), floor_events);
  }
  return resolve_contention(compute_timers(w, lambda), tie_rank);
}

}  // namespace

RunSummary run(const Scenario& scenario, std::uint64_t seed, const TraceSink& sink) {
  const SimConfig& cfg = scenario.config();
  const int n = scenario.subsystems();
  const int m = scenario.channels();
  const auto& q = scenario.q();
  const long long horizon = cfg.horizon;

  RunSummary sum;
  sum.seed = seed;
  sum.policy = cfg.policy;
  sum.horizon = horizon;
  sum.config_hash = scenario.hash();
  sum.subsystem_cost.assign(n, 0.0);
  sum.mean_cov_trace.assign(n, 0.0);
  sum.mean_age.assign(n, 0.0);
  sum.plays = Eigen::MatrixXd::Zero(n, m);
  sum.successes = Eigen::MatrixXd::Zero(n, m);
  sum.tail_slots = std::min(horizon, cfg.tail_window);
  if (horizon == 0) return sum;

  const CounterRng rng(seed);
  auto tables = make_tables(scenario.models());
  std::vector<PlantState> plants;
  plants.reserve(n);
  for (int i = 0; i < n; ++i) plants.push_back(initial_state(scenario.models()[i], rng, i));

  const bool learning = cfg.policy == Policy::kCoilQhat || cfg.policy == Policy::kQhatOnly;
  std::vector<BanditState> bandits(n, BanditState(m, cfg.epsilon_lo, cfg.epsilon_hi));
  const std::vector<Assignment> warm = learning ? warmup_schedule(n, m, rng) : std::vector<Assignment>{};
  const PerturbedUcb1 ucb;
  Algorithm1Options a1;
  a1.lambda = cfg.lambda;
  a1.weight_by_coil = cfg.policy == Policy::kCoilQhat;

  const int rr = std::min(n, m);
  std::vector<int> ages(n, 0);
  std::vector<int> ages_prev(n, 0);
  Eigen::MatrixXd raw(n, m);
  Eigen::MatrixXd tie(n, m);
  const long long tail_start = horizon - sum.tail_slots;
  double total_cost = 0.0;
  double total_expected = 0.0;

  for (long long k = 0; k < horizon; ++k) {
    const auto slot = static_cast<std::uint64_t>(k);
    ages_prev = ages;
    Allocation alloc;
    TransmissionOutcome outcome;
    bool warmup = false;

    switch (cfg.policy) {
      case Policy::kKnownQ:
        for (int i = 0; i < n; ++i) raw.row(i) = tables[i].coil(ages_prev[i]) * q.matrix().row(i);
        alloc = timer_allocation(raw, cfg.lambda, sum.coil_floor_events);
        outcome = transmit(alloc, q, rng, slot);
        break;
      case Policy::kQ0Baseline:
        for (int i = 0; i < n; ++i) {
          const double c = tables[i].coil(ages_prev[i]);
          for (int j = 0; j < m; ++j) {
            raw(i, j) = c * cfg.q0;
            tie(i, j) = rng.uniform({StreamRole::kTieBreak, static_cast<std::uint32_t>(i)},
                                    slot * static_cast<std::uint64_t>(m) + j);
          }
        }
        alloc = timer_allocation(raw, cfg.lambda, sum.coil_floor_events, &tie);
        outcome = transmit(alloc, q, rng, slot);
        break;
      case Policy::kRoundRobin:
        for (int j = 0; j < rr; ++j) alloc.assign(static_cast<int>((k * rr + j) % n), j);
        outcome = transmit(alloc, q, rng, slot);
        break;
      case Policy::kCoilQhat:
      case Policy::kQhatOnly:
        if (k < static_cast<long long>(warm.size())) {
          warmup = true;
          alloc.assign(warm[k].subsystem, warm[k].channel);
          outcome = transmit(alloc, q, rng, slot);
          bandits[warm[k].subsystem].reward_update(warm[k].channel, outcome.gamma[0]);
        } else {
          auto st = algorithm1_step(bandits, tables, ages_prev, q, ucb, rng, slot, a1, sum.coil_floor_events);
          alloc = std::move(st.allocation);
          outcome = std::move(st.outcome);
        }
        break;
    }
    if (warmup) ++sum.warmup_slots;

    for (std::size_t p = 0; p < alloc.size(); ++p) {
      const auto& a = alloc.pairs()[p];
      sum.plays(a.subsystem, a.channel) += 1;
      if (outcome.gamma[p]) sum.successes(a.subsystem, a.channel) += 1;
    }

    TraceRecord rec;
    if (sink) {
      rec.age.resize(n);
      rec.stage_cost.resize(n);
      rec.cov_trace.resize(n);
    }
    for (int i = 0; i < n; ++i) {
      const auto& model = scenario.models()[i];
      std::optional<VectorXd> received;
      if (outcome.theta[i]) received = plants[i].x_sensor;
      estimator_update(model, plants[i], received);
      ages[i] = plants[i].age;
      const double cost = step(model, plants[i], rng, i, slot);
      const double cov = tables[i].covariance(ages[i]).trace();
      if (!std::isfinite(cost) || !std::isfinite(cov)) sum.diverged = true;
      total_cost += cost;
      sum.subsystem_cost[i] += cost;
      sum.mean_cov_trace[i] += cov;
      sum.mean_age[i] += ages[i];
      if (sink) {
        rec.age[i] = ages[i];
        rec.stage_cost[i] = cost;
        rec.cov_trace[i] = cov;
      }
    }

    const RegretTerms terms = regret_terms(tables, ages_prev, alloc, q);
    total_expected += terms.expected_stage_cost;
    sum.cumulative_regret += terms.regret;
    sum.cumulative_cost_regret += terms.cost_regret;
    if (k >= tail_start) {
      sum.tail_regret += terms.regret;
      sum.tail_cost_regret += terms.cost_regret;
    }

    if (sink) {
      rec.slot = k;
      rec.allocation = std::move(alloc);
      rec.gamma = std::move(outcome.gamma);
      rec.theta = std::move(outcome.theta);
      rec.expected_stage_cost = terms.expected_stage_cost;
      rec.regret = terms.regret;
      rec.cost_regret = terms.cost_regret;
      rec.warmup = warmup;
      sink(rec);
    }
  }

  const double kk = static_cast<double>(horizon);
  sum.average_cost = total_cost / kk;
  sum.average_expected_cost = total_expected / kk;
  for (int i = 0; i < n; ++i) {
    sum.subsystem_cost[i] /= kk;
    sum.mean_cov_trace[i] /= kk;
    sum.mean_age[i] /= kk;
  }
  sum.tail_regret /= static_cast<double>(sum.tail_slots);
  sum.tail_cost_regret /= static_cast<double>(sum.tail_slots);
  for (const auto& t : tables) sum.diverged = sum.diverged || t.saturated();
  return sum;
}

RunSummary run(const SimConfig& config, std::uint64_t seed, const TraceSink& sink) {
  return run(Scenario(config), seed, sink);
}

RegretSeries compute_regret(std::span<const TraceRecord> trace, const LinkQualityMatrix& q,
                            std::span<const SubsystemModel> models) {
  auto tables = make_tables(models);
  RegretSeries out;
  out.regret.reserve(trace.size());
  out.cost_regret.reserve(trace.size());
  std::vector<int> ages(models.size(), 0);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (k > 0) ages = trace[k - 1].age;
    const RegretTerms t = regret_terms(tables, ages, trace[k].allocation, q);
    out.regret.push_back(t.regret);
    out.cost_regret.push_back(t.cost_regret);
  }
  return out;
}

std::vector<RunSummary> run_many(const SimConfig& config, unsigned threads,
                                 const std::function<TraceSink(std::uint64_t)>& sink_for) {
  validate(config, true);
  const Scenario scenario(config);
  const std::size_t count = config.seeds.size();
  std::vector<RunSummary> out(count);
  std::vector<std::exception_ptr> errors(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s = next++; s < count; s = next++) {
      try {
        const auto seed = config.seeds[s];
        out[s] = run(scenario, seed, sink_for ? sink_for(seed) : TraceSink{});
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

SimConfig sweep_instance(const SimConfig& base, double value) {
  SimConfig c = base;
  if (base.sweep.parameter == "q_scale") {
    if (!(value > 0.0)) throw Error(ErrorCode::kInvalidConfig, "sweep.values: q_scale must be positive", "sweep.values");
    c.q = (base.q * value).cwiseMin(1.0);
    return c;
  }
  const long n = std::lround(value);
  if (n < 1 || std::abs(value - static_cast<double>(n)) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "sweep.values: n_subsystems must be positive integers", "sweep.values");
  }
  const long m = std::max(1L, std::lround(base.sweep.channel_ratio * static_cast<double>(n)));
  c.subsystems.assign(static_cast<std::size_t>(n), base.subsystems.front());
  c.q.resize(n, m);
  const CounterRng rng(base.sweep.q_seed);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < m; ++j) {
      c.q(i, j) = rng.uniform({StreamRole::kConfig, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}, 0,
                              base.sweep.q_lo, base.sweep.q_hi);
    }
  }
  return c;
}

std::vector<SweepPoint> sweep(const SimConfig& config, unsigned threads) {
  if (config.sweep.values.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "sweep.values: at least one value is required", "sweep.values");
  }
  std::vector<Policy> policies = config.sweep.policies;
  if (policies.empty()) policies.push_back(config.policy);
  std::vector<SweepPoint> points;
  for (double v : config.sweep.values) {
    for (Policy p : policies) {
      SimConfig inst = sweep_instance(config, v);
      inst.policy = p;
      const auto runs = run_many(inst, threads);
      SweepPoint pt;
      pt.value = v;
      pt.policy = p;
      pt.subsystems = static_cast<int>(inst.subsystems.size());
      pt.channels = static_cast<int>(inst.q.cols());
      double s2 = 0.0;
      for (const auto& r : runs) {
        pt.mean_cost += r.average_cost;
        s2 += r.average_cost * r.average_cost;
        pt.mean_regret += r.cumulative_regret;
        pt.mean_cost_regret += r.cumulative_cost_regret;
        pt.diverged = pt.diverged || r.diverged;
      }
      const double c = static_cast<double>(runs.size());
      pt.mean_cost /= c;
      pt.mean_regret /= c;
      pt.mean_cost_regret /= c;
      if (runs.size() > 1) {
        const double var = std::max(0.0, (s2 - c * pt.mean_cost * pt.mean_cost) / (c - 1.0));
        pt.cost_stderr = std::sqrt(var / c);
      }
      points.push_back(pt);
    }
  }
  return points;
}

}  // namespace wncs
