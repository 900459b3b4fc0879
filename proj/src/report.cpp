#include "wncs/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "wncs/error.hpp"

namespace wncs {

using nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void dump_into(const json& j, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::number_float: {
      const double x = j.get<double>();
      out += std::isfinite(x) ? format_double(x) : "null";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Numeric arrays stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat && indent >= 0 ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        dump_into(e, indent, depth + 1, out);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent >= 0 ? ": " : ":";
        dump_into(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    default:
      out += j.dump();
  }
}

std::string pairs_text(const Allocation& a) {
  std::string s;
  for (const auto& p : a.sorted()) {
    if (!s.empty()) s += ';';
    s += std::to_string(p.subsystem) + ':' + std::to_string(p.channel);
  }
  return s;
}

class CsvWriter final : public TraceWriter {
 public:
  CsvWriter(std::ostream& out, int n, int m) : out_(out), n_(n), m_(m) {
    out_ << "record,slot,subsystem,channel,gamma,theta,age,stage_cost,cov_trace,"
            "expected_stage_cost,regret,cost_regret,pairs,warmup\n";
  }

  void write(const TraceRecord& r) override {
    r.allocation.validate(n_, m_);
    out_ << "slot," << r.slot << ",,,,,,,," << format_double(r.expected_stage_cost) << ','
         << format_double(r.regret) << ',' << format_double(r.cost_regret) << ',' << pairs_text(r.allocation)
         << ',' << (r.warmup ? 1 : 0) << '\n';
    for (int i = 0; i < n_; ++i) {
      int channel = -1;
      std::string gamma;
      const auto& pairs = r.allocation.pairs();
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (pairs[p].subsystem == i) {
          channel = pairs[p].channel;
          gamma = r.gamma[p] ? "1" : "0";
        }
      }
      out_ << "subsystem," << r.slot << ',' << i << ',' << channel << ',' << gamma << ','
           << (r.theta[i] ? 1 : 0) << ',' << r.age[i] << ',' << format_double(r.stage_cost[i]) << ','
           << format_double(r.cov_trace[i]) << ",,,,,\n";
    }
  }

 private:
  std::ostream& out_;
  int n_;
  int m_;
};

class JsonWriter final : public TraceWriter {
 public:
  JsonWriter(std::ostream& out, int n, int m) : out_(out), n_(n), m_(m) { out_ << "["; }

  void write(const TraceRecord& r) override {
    r.allocation.validate(n_, m_);
    json pairs = json::array();
    for (std::size_t p = 0; p < r.allocation.size(); ++p) {
      const auto& a = r.allocation.pairs()[p];
      pairs.push_back({{"subsystem", a.subsystem}, {"channel", a.channel}, {"gamma", static_cast<bool>(r.gamma[p])}});
    }
    json theta = json::array();
    for (bool t : r.theta) theta.push_back(t);
    const json rec = {{"slot", r.slot},
                      {"pairs", std::move(pairs)},
                      {"theta", std::move(theta)},
                      {"age", r.age},
                      {"stage_cost", r.stage_cost},
                      {"cov_trace", r.cov_trace},
                      {"expected_stage_cost", r.expected_stage_cost},
                      {"regret", r.regret},
                      {"cost_regret", r.cost_regret},
                      {"warmup", r.warmup}};
    out_ << (first_ ? "\n" : ",\n") << dump_json(rec, -1);
    first_ = false;
  }

  void finish() override { out_ << "\n]\n"; }

 private:
  std::ostream& out_;
  int n_;
  int m_;
  bool first_ = true;
};

json matrix_json(const Eigen::MatrixXd& m) { return matrix_to_json(m); }

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::string out;
  dump_into(j, indent, 0, out);
  return out;
}

std::unique_ptr<TraceWriter> make_csv_writer(std::ostream& out, int subsystems, int channels) {
  return std::make_unique<CsvWriter>(out, subsystems, channels);
}

std::unique_ptr<TraceWriter> make_json_writer(std::ostream& out, int subsystems, int channels) {
  return std::make_unique<JsonWriter>(out, subsystems, channels);
}

json summary_to_json(const RunSummary& s) {
  return {{"seed", s.seed},
          {"policy", to_string(s.policy)},
          {"horizon", s.horizon},
          {"config_hash", s.config_hash},
          {"average_cost", s.average_cost},
          {"subsystem_cost", s.subsystem_cost},
          {"average_expected_cost", s.average_expected_cost},
          {"mean_cov_trace", s.mean_cov_trace},
          {"mean_age", s.mean_age},
          {"cumulative_regret", s.cumulative_regret},
          {"cumulative_cost_regret", s.cumulative_cost_regret},
          {"tail_slots", s.tail_slots},
          {"tail_regret", s.tail_regret},
          {"tail_cost_regret", s.tail_cost_regret},
          {"plays", matrix_json(s.plays)},
          {"successes", matrix_json(s.successes)},
          {"warmup_slots", s.warmup_slots},
          {"coil_floor_events", s.coil_floor_events},
          {"diverged", s.diverged}};
}

json aggregate_to_json(std::span<const RunSummary> runs) {
  json j;
  json per = json::array();
  double cost = 0.0, regret = 0.0, cost_regret = 0.0, tail = 0.0, tail_cost = 0.0;
  bool diverged = false;
  for (const auto& r : runs) {
    per.push_back(summary_to_json(r));
    cost += r.average_cost;
    regret += r.cumulative_regret;
    cost_regret += r.cumulative_cost_regret;
    tail += r.tail_regret;
    tail_cost += r.tail_cost_regret;
    diverged = diverged || r.diverged;
  }
  const double n = runs.empty() ? 1.0 : static_cast<double>(runs.size());
  j["runs"] = runs.size();
  if (!runs.empty()) {
    j["policy"] = to_string(runs.front().policy);
    j["config_hash"] = runs.front().config_hash;
  }
  j["mean_average_cost"] = cost / n;
  j["mean_cumulative_regret"] = regret / n;
  j["mean_cumulative_cost_regret"] = cost_regret / n;
  j["mean_tail_regret"] = tail / n;
  j["mean_tail_cost_regret"] = tail_cost / n;
  j["diverged"] = diverged;
  j["per_seed"] = std::move(per);
  return j;
}

json stability_to_json(const StabilityAnalysis& a, const SimConfig& config) {
  const auto& p = config.stability.params;
  json subs = json::array();
  for (std::size_t i = 0; i < a.verdicts.size(); ++i) {
    const auto& v = a.verdicts[i];
    std::vector<double> bound = v.bound;
    if (!bound.empty()) bound[0] = std::numeric_limits<double>::infinity();
    subs.push_back({{"subsystem", i},
                    {"verdict", v.certified ? "certified-stable" : "not-certified"},
                    {"reason", v.reason},
                    {"mu", vector_json(a.mu[i])},
                    {"s_radius", v.series_radius},
                    {"s_norm", v.series_norm},
                    {"bound", bound},
                    {"first_bound_violation", v.first_bound_violation},
                    {"first_increase", v.first_increase},
                    {"window", {v.window_begin, v.window_end}},
                    {"sigma_max", v.sigma_max},
                    {"norm_A", v.norm_A},
                    {"tail_mass", v.tail_mass},
                    {"decay_ratio", v.decay_ratio},
                    {"root_test", v.root_test},
                    {"limit_cov_trace", a.limit_covariance[i].trace()},
                    {"limit_covariance", matrix_json(a.limit_covariance[i])}});
  }
  return {{"verdict", a.certified ? "certified-stable" : "not-certified"},
          {"config_hash", config_hash(config)},
          {"q", matrix_json(config.q)},
          {"params",
           {{"m_bar", config.stability.m_bar},
            {"beta", p.beta},
            {"p", p.p},
            {"t0", p.t0},
            {"measure", p.measure == GrowthMeasure::kSpectralRadius ? "spectral_radius" : "norm_of_power"}}},
          {"chain",
           {{"states", a.chain.states()},
            {"method", a.stationary.method},
            {"residual", a.stationary.residual},
            {"power_agreement", a.stationary.power_agreement},
            {"power_iterations", a.stationary.power_iterations},
            {"warnings", a.stationary.warnings},
            {"seconds", a.seconds}}},
          {"subsystems", std::move(subs)}};
}

json sweep_to_json(std::span<const SweepPoint> points, const SimConfig& config) {
  json rows = json::array();
  for (const auto& pt : points) {
    rows.push_back({{"value", pt.value},
                    {"policy", to_string(pt.policy)},
                    {"subsystems", pt.subsystems},
                    {"channels", pt.channels},
                    {"mean_cost", pt.mean_cost},
                    {"cost_stderr", pt.cost_stderr},
                    {"mean_cumulative_regret", pt.mean_regret},
                    {"mean_cumulative_cost_regret", pt.mean_cost_regret},
                    {"diverged", pt.diverged}});
  }
  return {{"parameter", config.sweep.parameter},
          {"config_hash", config_hash(config)},
          {"seeds", config.seeds.size()},
          {"horizon", config.horizon},
          {"points", std::move(rows)}};
}

}  // namespace wncs
