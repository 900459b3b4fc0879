#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wncs/coil.hpp"
#include "wncs/config.hpp"
#include "wncs/network.hpp"
#include "wncs/plant.hpp"

namespace wncs {

/// One slot of a run. Per-subsystem vectors are indexed by subsystem.
struct TraceRecord {
  long long slot = 0;
  Allocation allocation;
  std::vector<bool> gamma;        ///< Aligned with allocation.pairs().
  std::vector<bool> theta;
  std::vector<int> age;           ///< t_{i,k} after this slot's delivery.
  std::vector<double> stage_cost; ///< x'Qx + u'Ru sample.
  std::vector<double> cov_trace;  ///< tr(P_{k|k}) = tr(h^t(P_bar)).
  double expected_stage_cost = 0.0;
  double regret = 0.0;
  double cost_regret = 0.0;
  bool warmup = false;
};

using TraceSink = std::function<void(const TraceRecord&)>;

struct RunSummary {
  std::uint64_t seed = 0;
  Policy policy = Policy::kKnownQ;
  long long horizon = 0;
  std::string config_hash;
  double average_cost = 0.0;                ///< (1/K) sum_k sum_i stage cost
  std::vector<double> subsystem_cost;       ///< Per-subsystem time average.
  double average_expected_cost = 0.0;
  std::vector<double> mean_cov_trace;
  std::vector<double> mean_age;
  double cumulative_regret = 0.0;
  double cumulative_cost_regret = 0.0;
  double tail_regret = 0.0;                 ///< Mean over the last tail_window slots.
  double tail_cost_regret = 0.0;
  long long tail_slots = 0;
  Eigen::MatrixXd plays;                    ///< Allocations per (subsystem, channel).
  Eigen::MatrixXd successes;
  long long warmup_slots = 0;
  long long coil_floor_events = 0;
  bool diverged = false;                    ///< A non-finite cost or covariance appeared.
};

/// Policy-independent quantities shared by all runs of one config.
class Scenario {
 public:
  explicit Scenario(const SimConfig& config);

  const SimConfig& config() const { return config_; }
  std::span<const SubsystemModel> models() const { return models_; }
  const LinkQualityMatrix& q() const { return q_; }
  int subsystems() const { return static_cast<int>(models_.size()); }
  int channels() const { return static_cast<int>(q_.channels()); }
  const std::string& hash() const { return hash_; }

 private:
  SimConfig config_;
  std::vector<SubsystemModel> models_;
  LinkQualityMatrix q_;
  std::string hash_;
};

/// Per-slot regret terms at the ages the policy saw (t_{i,k-1}).
struct RegretTerms {
  double expected_stage_cost = 0.0;
  double regret = 0.0;
  double cost_regret = 0.0;
};

RegretTerms regret_terms(std::span<CoilTable> tables, std::span<const int> ages_prev,
                         const Allocation& allocation, const LinkQualityMatrix& q);

/// Runs `config.horizon` slots with one seed. The sink, if any, sees every
/// record in slot order. Same (config, seed) gives the same records.
RunSummary run(const Scenario& scenario, std::uint64_t seed, const TraceSink& sink = {});
RunSummary run(const SimConfig& config, std::uint64_t seed, const TraceSink& sink = {});

/// Recomputes the regret series from a trace; ages before slot 0 are zero.
struct RegretSeries {
  std::vector<double> regret;
  std::vector<double> cost_regret;
};
RegretSeries compute_regret(std::span<const TraceRecord> trace, const LinkQualityMatrix& q,
                            std::span<const SubsystemModel> models);

/// Runs every seed of the config on up to `threads` worker threads. Results
/// are in seed-list order whatever the thread count. `sink_for(seed)` supplies
/// a per-run sink; it is called from the worker running that seed.
std::vector<RunSummary> run_many(const SimConfig& config, unsigned threads = 0,
                                 const std::function<TraceSink(std::uint64_t)>& sink_for = {});

struct SweepPoint {
  double value = 0.0;
  Policy policy = Policy::kKnownQ;
  int subsystems = 0;
  int channels = 0;
  double mean_cost = 0.0;
  double cost_stderr = 0.0;          ///< Across seeds.
  double mean_regret = 0.0;          ///< Cumulative, averaged over seeds.
  double mean_cost_regret = 0.0;
  bool diverged = false;
};

/// Config for one sweep grid point.
SimConfig sweep_instance(const SimConfig& base, double value);

std::vector<SweepPoint> sweep(const SimConfig& config, unsigned threads = 0);

}  // namespace wncs
