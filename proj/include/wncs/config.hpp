#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "wncs/plant.hpp"
#include "wncs/stability.hpp"

namespace wncs {

inline constexpr int kSchemaVersion = 1;

enum class Policy {
  kKnownQ,      ///< lambda / (CoIL q)
  kCoilQhat,    ///< lambda / (CoIL qhat), the learning policy
  kQ0Baseline,  ///< lambda / (CoIL q0), random channel among ties
  kQhatOnly,    ///< lambda / qhat
  kRoundRobin,
};

std::string to_string(Policy p);
/// Throws Error(kInvalidConfig) on an unknown name.
Policy parse_policy(const std::string& name);

enum class TraceFormat { kCsv, kJson };

struct StabilityConfig {
  int m_bar = 52;
  StabilityParams params;
};

/// Parameters of the `sweep` subcommand.
struct SweepConfig {
  std::string parameter = "q_scale";  ///< "q_scale" or "n_subsystems"
  std::vector<double> values;
  double channel_ratio = 0.75;        ///< M = max(1, round(ratio * N)) for n_subsystems
  double q_lo = 0.5;                  ///< Generated link qualities for n_subsystems
  double q_hi = 0.95;
  std::uint64_t q_seed = 7;
  std::vector<Policy> policies;       ///< Empty means the config's policy.
};

struct SimConfig {
  int schema_version = kSchemaVersion;
  std::vector<SubsystemSpec> subsystems;
  Eigen::MatrixXd q;
  Policy policy = Policy::kKnownQ;
  long long horizon = 0;
  std::vector<std::uint64_t> seeds;
  double lambda = 1.0;
  double epsilon_lo = -0.5;
  double epsilon_hi = 0.5;
  double q0 = 0.5;
  /// Trailing window for the summary's tail regret averages.
  long long tail_window = 10000;
  StabilityConfig stability;
  SweepConfig sweep;
  std::string out_dir = "out";
  TraceFormat format = TraceFormat::kCsv;
  bool write_trace = true;
};

/// Parses and validates a config document. Errors carry the JSON path of the
/// offending field, e.g. `subsystems[1].A`.
SimConfig parse_config(const nlohmann::json& doc);
SimConfig load_config(const std::string& path);

/// Canonical JSON form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const SimConfig& config);

/// Throws Error(kInvalidConfig) with a field path on the first problem found.
/// `require_seeds` is false for commands that do not simulate.
void validate(const SimConfig& config, bool require_seeds = true);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const SimConfig& config);

/// Matrix from a JSON number (1x1) or an array of rows.
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

}  // namespace wncs
