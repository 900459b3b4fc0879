#include "wncs/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wncs/error.hpp"
#include "wncs/presets.hpp"

namespace wncs {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::kInvalidConfig, path + ": " + message, path);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) fail(path, "expected an integer");
  return j.get<long long>();
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& path) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) fail(path, "expected a number or an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(k) = number(j[k], path + "[" + std::to_string(k) + "]");
  return v;
}

SubsystemSpec subsystem_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  SubsystemSpec s;
  if (j.contains("preset")) {
    const auto& p = j["preset"];
    if (!p.is_string()) fail(path + ".preset", "expected a string");
    const auto name = p.get<std::string>();
    if (name == "segway") {
      s = presets::segway();
    } else if (name == "scalar_fixture") {
      s = presets::scalar_fixture();
    } else {
      fail(path + ".preset", "unknown subsystem preset '" + name + "' (segway, scalar_fixture)");
    }
  }
  const std::pair<const char*, Eigen::MatrixXd*> fields[] = {
      {"A", &s.A}, {"B", &s.B}, {"C", &s.C}, {"W", &s.W}, {"V", &s.V}, {"Q", &s.Q}, {"R", &s.R}, {"X0", &s.X0}};
  for (const auto& [key, target] : fields) {
    if (j.contains(key)) *target = matrix_from_json(j[key], path + "." + key);
  }
  if (j.contains("x0")) s.x0_mean = vector_from_json(j["x0"], path + ".x0");
  for (const auto& [key, target] : fields) {
    if (std::string(key) != "X0" && target->size() == 0) fail(path + "." + key, "missing (give it or a preset)");
  }
  return s;
}

void check_subsystem(const SubsystemSpec& s, const std::string& path) {
  try {
    SubsystemModel model(s);
  } catch (const Error& e) {
    const std::string field = e.field().empty() ? path : path + "." + e.field();
    throw Error(ErrorCode::kInvalidConfig, field + ": " + e.what(), field);
  }
}

}  // namespace

std::string to_string(Policy p) {
  switch (p) {
    case Policy::kKnownQ: return "known-q";
    case Policy::kCoilQhat: return "coil-qhat";
    case Policy::kQ0Baseline: return "q0-baseline";
    case Policy::kQhatOnly: return "qhat-only";
    case Policy::kRoundRobin: return "round-robin";
  }
  return "unknown";
}

Policy parse_policy(const std::string& name) {
  for (Policy p : {Policy::kKnownQ, Policy::kCoilQhat, Policy::kQ0Baseline, Policy::kQhatOnly, Policy::kRoundRobin}) {
    if (to_string(p) == name) return p;
  }
  fail("policy", "unknown policy '" + name + "' (known-q, coil-qhat, q0-baseline, qhat-only, round-robin)");
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& path) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(path, "expected a number or a non-empty array of rows");
  const bool nested = j[0].is_array();
  if (!nested) {
    // A flat array is a column vector.
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t r = 0; r < j.size(); ++r) m(r, 0) = number(j[r], path + "[" + std::to_string(r) + "]");
    return m;
  }
  const std::size_t cols = j[0].size();
  if (cols == 0) fail(path, "rows must be non-empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) fail(rp, "rows must all have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

SimConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail("$", "config must be a JSON object");
  SimConfig c;
  if (!doc.contains("schema_version")) fail("schema_version", "missing");
  c.schema_version = static_cast<int>(integer(doc["schema_version"], "schema_version"));
  if (c.schema_version != kSchemaVersion) {
    fail("schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
  }

  if (!doc.contains("subsystems") || !doc["subsystems"].is_array() || doc["subsystems"].empty()) {
    fail("subsystems", "expected a non-empty array");
  }
  const auto& subs = doc["subsystems"];
  for (std::size_t k = 0; k < subs.size(); ++k) {
    const std::string path = "subsystems[" + std::to_string(k) + "]";
    const SubsystemSpec spec = subsystem_from_json(subs[k], path);
    long long count = 1;
    if (subs[k].contains("count")) {
      count = integer(subs[k]["count"], path + ".count");
      if (count < 1) fail(path + ".count", "must be at least 1");
    }
    for (long long r = 0; r < count; ++r) c.subsystems.push_back(spec);
  }

  if (!doc.contains("q")) fail("q", "missing");
  c.q = matrix_from_json(doc["q"], "q");
  if (doc.contains("policy")) {
    if (!doc["policy"].is_string()) fail("policy", "expected a string");
    c.policy = parse_policy(doc["policy"].get<std::string>());
  }
  if (doc.contains("horizon")) c.horizon = integer(doc["horizon"], "horizon");
  if (doc.contains("seeds")) {
    if (!doc["seeds"].is_array()) fail("seeds", "expected an array of integers");
    for (std::size_t k = 0; k < doc["seeds"].size(); ++k) {
      const auto& s = doc["seeds"][k];
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
        fail("seeds[" + std::to_string(k) + "]", "expected a nonnegative integer");
      }
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (doc.contains("lambda")) c.lambda = number(doc["lambda"], "lambda");
  if (doc.contains("epsilon")) {
    const auto& e = doc["epsilon"];
    if (!e.is_array() || e.size() != 2) fail("epsilon", "expected [lo, hi]");
    c.epsilon_lo = number(e[0], "epsilon[0]");
    c.epsilon_hi = number(e[1], "epsilon[1]");
  }
  if (doc.contains("q0")) c.q0 = number(doc["q0"], "q0");
  if (doc.contains("tail_window")) c.tail_window = integer(doc["tail_window"], "tail_window");
  if (doc.contains("stability")) {
    const auto& s = doc["stability"];
    if (!s.is_object()) fail("stability", "expected an object");
    if (s.contains("m_bar")) c.stability.m_bar = static_cast<int>(integer(s["m_bar"], "stability.m_bar"));
    if (s.contains("beta")) c.stability.params.beta = number(s["beta"], "stability.beta");
    if (s.contains("p")) c.stability.params.p = number(s["p"], "stability.p");
    if (s.contains("t0")) c.stability.params.t0 = static_cast<int>(integer(s["t0"], "stability.t0"));
    if (s.contains("measure")) {
      const auto m = s["measure"].is_string() ? s["measure"].get<std::string>() : std::string();
      if (m == "spectral_radius") {
        c.stability.params.measure = GrowthMeasure::kSpectralRadius;
      } else if (m == "norm_of_power") {
        c.stability.params.measure = GrowthMeasure::kNormOfPower;
      } else {
        fail("stability.measure", "expected \"spectral_radius\" or \"norm_of_power\"");
      }
    }
  }
  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    if (!s.is_object()) fail("sweep", "expected an object");
    if (s.contains("parameter")) {
      if (!s["parameter"].is_string()) fail("sweep.parameter", "expected a string");
      c.sweep.parameter = s["parameter"].get<std::string>();
    }
    if (s.contains("values")) {
      const auto v = vector_from_json(s["values"], "sweep.values");
      c.sweep.values.assign(v.data(), v.data() + v.size());
    }
    if (s.contains("channel_ratio")) c.sweep.channel_ratio = number(s["channel_ratio"], "sweep.channel_ratio");
    if (s.contains("q_range")) {
      const auto v = vector_from_json(s["q_range"], "sweep.q_range");
      if (v.size() != 2) fail("sweep.q_range", "expected [lo, hi]");
      c.sweep.q_lo = v(0);
      c.sweep.q_hi = v(1);
    }
    if (s.contains("policies")) {
      if (!s["policies"].is_array()) fail("sweep.policies", "expected an array of policy names");
      for (std::size_t k = 0; k < s["policies"].size(); ++k) {
        const auto& v = s["policies"][k];
        if (!v.is_string()) fail("sweep.policies[" + std::to_string(k) + "]", "expected a string");
        c.sweep.policies.push_back(parse_policy(v.get<std::string>()));
      }
    }
    if (s.contains("q_seed")) c.sweep.q_seed = static_cast<std::uint64_t>(integer(s["q_seed"], "sweep.q_seed"));
  }
  if (doc.contains("output")) {
    const auto& o = doc["output"];
    if (!o.is_object()) fail("output", "expected an object");
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) fail("output.dir", "expected a string");
      c.out_dir = o["dir"].get<std::string>();
    }
    if (o.contains("format")) {
      const auto f = o["format"].is_string() ? o["format"].get<std::string>() : std::string();
      if (f == "csv") {
        c.format = TraceFormat::kCsv;
      } else if (f == "json") {
        c.format = TraceFormat::kJson;
      } else {
        fail("output.format", "expected \"csv\" or \"json\"");
      }
    }
    if (o.contains("trace")) {
      if (!o["trace"].is_boolean()) fail("output.trace", "expected a boolean");
      c.write_trace = o["trace"].get<bool>();
    }
  }
  validate(c, false);
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file '" + path + "'", "config");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config is not valid JSON: ") + e.what(), "$");
  }
  return parse_config(doc);
}

void validate(const SimConfig& c, bool require_seeds) {
  const auto n = static_cast<Eigen::Index>(c.subsystems.size());
  if (n == 0) fail("subsystems", "at least one subsystem is required");
  for (Eigen::Index i = 0; i < n; ++i) check_subsystem(c.subsystems[i], "subsystems[" + std::to_string(i) + "]");
  if (c.q.rows() != n || c.q.cols() < 1) {
    fail("q", "expected " + std::to_string(n) + " rows (one per subsystem) and at least one column");
  }
  for (Eigen::Index i = 0; i < c.q.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.q.cols(); ++j) {
      if (!(c.q(i, j) > 0.0 && c.q(i, j) <= 1.0)) {
        fail("q[" + std::to_string(i) + "][" + std::to_string(j) + "]", "link quality must be in (0, 1]");
      }
    }
  }
  if (c.horizon < 0) fail("horizon", "must be nonnegative");
  const bool learning = c.policy == Policy::kCoilQhat || c.policy == Policy::kQhatOnly;
  if (learning && c.horizon > 0 && c.horizon < n * c.q.cols()) {
    fail("horizon", "learning policies need horizon >= N*M = " + std::to_string(n * c.q.cols()) + " for warm-up");
  }
  if (require_seeds && c.seeds.empty()) fail("seeds", "at least one seed is required");
  if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) fail("lambda", "must be positive and finite");
  if (!(-1.0 < c.epsilon_lo && c.epsilon_lo <= c.epsilon_hi && c.epsilon_hi < 1.0)) {
    fail("epsilon", "bounds must satisfy -1 < lo <= hi < 1");
  }
  if (!(c.q0 > 0.0 && c.q0 <= 1.0)) fail("q0", "must be in (0, 1]");
  if (c.tail_window < 1) fail("tail_window", "must be at least 1");
  if (c.stability.m_bar < 2) fail("stability.m_bar", "must be at least 2");
  if (!(c.stability.params.beta > 0.0)) fail("stability.beta", "must be positive");
  if (!(c.stability.params.p > 1.0)) fail("stability.p", "must exceed 1");
  if (c.stability.params.t0 < 1 || c.stability.params.t0 >= c.stability.m_bar) {
    fail("stability.t0", "must satisfy 1 <= t0 < m_bar");
  }
  if (c.sweep.parameter != "q_scale" && c.sweep.parameter != "n_subsystems") {
    fail("sweep.parameter", "expected \"q_scale\" or \"n_subsystems\"");
  }
  if (!(c.sweep.channel_ratio > 0.0)) fail("sweep.channel_ratio", "must be positive");
  if (!(0.0 < c.sweep.q_lo && c.sweep.q_lo <= c.sweep.q_hi && c.sweep.q_hi <= 1.0)) {
    fail("sweep.q_range", "must satisfy 0 < lo <= hi <= 1");
  }
}

json to_json(const SimConfig& c) {
  json subs = json::array();
  for (const auto& s : c.subsystems) {
    json j;
    j["A"] = matrix_to_json(s.A);
    j["B"] = matrix_to_json(s.B);
    j["C"] = matrix_to_json(s.C);
    j["W"] = matrix_to_json(s.W);
    j["V"] = matrix_to_json(s.V);
    j["Q"] = matrix_to_json(s.Q);
    j["R"] = matrix_to_json(s.R);
    if (s.x0_mean.size() > 0) j["x0"] = std::vector<double>(s.x0_mean.data(), s.x0_mean.data() + s.x0_mean.size());
    if (s.X0.size() > 0) j["X0"] = matrix_to_json(s.X0);
    subs.push_back(std::move(j));
  }
  json doc;
  doc["schema_version"] = c.schema_version;
  doc["subsystems"] = std::move(subs);
  doc["q"] = matrix_to_json(c.q);
  doc["policy"] = to_string(c.policy);
  doc["horizon"] = c.horizon;
  doc["seeds"] = c.seeds;
  doc["lambda"] = c.lambda;
  doc["epsilon"] = {c.epsilon_lo, c.epsilon_hi};
  doc["q0"] = c.q0;
  doc["tail_window"] = c.tail_window;
  doc["stability"] = {{"m_bar", c.stability.m_bar},
                      {"beta", c.stability.params.beta},
                      {"p", c.stability.params.p},
                      {"t0", c.stability.params.t0},
                      {"measure", c.stability.params.measure == GrowthMeasure::kSpectralRadius ? "spectral_radius"
                                                                                               : "norm_of_power"}};
  doc["sweep"] = {{"parameter", c.sweep.parameter},
                  {"values", c.sweep.values},
                  {"channel_ratio", c.sweep.channel_ratio},
                  {"q_range", {c.sweep.q_lo, c.sweep.q_hi}},
                  {"q_seed", c.sweep.q_seed}};
  auto& policies = doc["sweep"]["policies"] = json::array();
  for (Policy p : c.sweep.policies) policies.push_back(to_string(p));
  doc["output"] = {{"dir", c.out_dir},
                   {"format", c.format == TraceFormat::kCsv ? "csv" : "json"},
                   {"trace", c.write_trace}};
  return doc;
}

std::string config_hash(const SimConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wncs
