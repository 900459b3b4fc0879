#pragma once

#include <memory>
#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "wncs/config.hpp"
#include "wncs/simulation.hpp"
#include "wncs/stability.hpp"

namespace wncs {

/// JSON text with every double printed as %.17g (non-finite values as null).
std::string dump_json(const nlohmann::json& j, int indent = 2);

/// Decimal text of a double at 17 significant digits.
std::string format_double(double x);

/// Streams trace records. Each record's allocation is re-validated before it
/// is written; a violating record throws Error(kInvalidAllocation).
class TraceWriter {
 public:
  virtual ~TraceWriter() = default;
  virtual void write(const TraceRecord& rec) = 0;
  virtual void finish() {}
};

/// CSV columns:
///   record,slot,subsystem,channel,gamma,theta,age,stage_cost,cov_trace,
///   expected_stage_cost,regret,cost_regret,pairs,warmup
/// Each slot gives one `slot` row (allocation, expected cost, regrets;
/// pairs as "i:j;i:j") followed by one `subsystem` row per subsystem
/// (channel -1 and empty gamma when not allocated).
std::unique_ptr<TraceWriter> make_csv_writer(std::ostream& out, int subsystems, int channels);

/// JSON array of slot objects with the same fields.
std::unique_ptr<TraceWriter> make_json_writer(std::ostream& out, int subsystems, int channels);

nlohmann::json summary_to_json(const RunSummary& s);

/// Mean over runs plus the per-seed summaries.
nlohmann::json aggregate_to_json(std::span<const RunSummary> runs);

nlohmann::json stability_to_json(const StabilityAnalysis& a, const SimConfig& config);

nlohmann::json sweep_to_json(std::span<const SweepPoint> points, const SimConfig& config);

}  // namespace wncs
