#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "wncs/config.hpp"
#include "wncs/error.hpp"
#include "wncs/oracle.hpp"
#include "wncs/presets.hpp"
#include "wncs/report.hpp"
#include "wncs/rng.hpp"
#include "wncs/simulation.hpp"

using namespace wncs;
using nlohmann::json;
using Eigen::MatrixXd;

namespace {

json scalar_doc() {
  return json::parse(R"({
    "schema_version": 1,
    "subsystems": [{"A": 2, "B": 1, "C": 1, "W": 1, "V": 1, "Q": 1, "R": 1, "count": 2},
                   {"preset": "scalar_fixture", "A": 1.5}],
    "q": [[0.9, 0.5], [0.6, 0.7], [0.8, 0.4]],
    "policy": "coil-qhat",
    "horizon": 300,
    "seeds": [1, 2]
  })");
}

std::string field_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    return e.field();
  }
  return "<no error>";
}

std::vector<TraceRecord> collect(const SimConfig& c, std::uint64_t seed, RunSummary* summary = nullptr) {
  std::vector<TraceRecord> out;
  auto s = run(c, seed, [&](const TraceRecord& r) { out.push_back(r); });
  if (summary) *summary = s;
  return out;
}

std::string csv_of(const SimConfig& c, std::uint64_t seed) {
  std::ostringstream os;
  auto w = make_csv_writer(os, static_cast<int>(c.subsystems.size()), static_cast<int>(c.q.cols()));
  run(c, seed, [&](const TraceRecord& r) { w->write(r); });
  w->finish();
  return os.str();
}

}  // namespace

TEST(Rng, CounterBased) {
  const CounterRng a(5), b(5), c(6);
  const StreamId id{StreamRole::kTest, 1, 2};
  EXPECT_EQ(a.bits(id, 10), b.bits(id, 10));
  EXPECT_NE(a.bits(id, 10), c.bits(id, 10));
  EXPECT_NE(a.bits(id, 10), a.bits({StreamRole::kTest, 2, 1}, 10));
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = a.uniform(id, k);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = a.normal(id, k);
    sum += z;
    sq += z * z;
  }
  EXPECT_LT(std::abs(sum / n), 4 / std::sqrt(double(n)));
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Config, ParsesShorthandPresetsAndCount) {
  const SimConfig c = parse_config(scalar_doc());
  ASSERT_EQ(c.subsystems.size(), 3u);
  EXPECT_EQ(c.subsystems[1].A(0, 0), 2.0);
  EXPECT_EQ(c.subsystems[2].A(0, 0), 1.5);
  EXPECT_EQ(c.policy, Policy::kCoilQhat);
  EXPECT_EQ(c.q0, 0.5);
  EXPECT_EQ(c.epsilon_lo, -0.5);
}

TEST(Config, RoundTripAndHash) {
  const SimConfig c = parse_config(scalar_doc());
  const SimConfig d = parse_config(to_json(c));
  EXPECT_EQ(to_json(c), to_json(d));
  EXPECT_EQ(config_hash(c), config_hash(d));
  EXPECT_EQ(config_hash(c).size(), 16u);
  SimConfig e = c;
  e.q(0, 0) = 0.91;
  EXPECT_NE(config_hash(c), config_hash(e));
}

TEST(Config, FieldPaths) {
  json doc = scalar_doc();
  doc["q"][1][0] = 0.0;
  EXPECT_EQ(field_of(doc), "q[1][0]");

  doc = scalar_doc();
  doc["subsystems"][0]["V"] = 0;
  EXPECT_EQ(field_of(doc).rfind("subsystems[0]", 0), 0u);

  doc = scalar_doc();
  doc["subsystems"][1].erase("preset");
  EXPECT_EQ(field_of(doc), "subsystems[1].B");

  doc = scalar_doc();
  doc["horizon"] = 4;
  EXPECT_EQ(field_of(doc), "horizon");

  doc = scalar_doc();
  doc["policy"] = "oracle";
  EXPECT_EQ(field_of(doc), "policy");

  doc = scalar_doc();
  doc["schema_version"] = 2;
  EXPECT_EQ(field_of(doc), "schema_version");

  doc = scalar_doc();
  doc["q"] = json::array({json::array({0.5})});
  EXPECT_EQ(field_of(doc), "q");

  doc = scalar_doc();
  doc["epsilon"] = {-1.0, 0.5};
  EXPECT_EQ(field_of(doc), "epsilon");
}

TEST(Config, EmptySeedsRejectedForSimulation) {
  json doc = scalar_doc();
  doc["seeds"] = json::array();
  const SimConfig c = parse_config(doc);
  EXPECT_THROW(validate(c, true), Error);
  EXPECT_THROW(run_many(c), Error);
}

TEST(Presets, Names) {
  for (const auto& n : presets::names()) EXPECT_NO_THROW(validate(presets::preset_config(n)));
  EXPECT_THROW(presets::preset_config("fig9"), Error);
}

TEST(Run, HorizonZero) {
  SimConfig c = parse_config(scalar_doc());
  c.horizon = 0;
  RunSummary s;
  EXPECT_TRUE(collect(c, 1, &s).empty());
  EXPECT_EQ(s.average_cost, 0.0);
  EXPECT_EQ(s.cumulative_regret, 0.0);
}

TEST(Run, DeterministicPerSeed) {
  for (Policy p : {Policy::kKnownQ, Policy::kCoilQhat, Policy::kQ0Baseline, Policy::kQhatOnly, Policy::kRoundRobin}) {
    SimConfig c = parse_config(scalar_doc());
    c.policy = p;
    const std::string a = csv_of(c, 1);
    EXPECT_EQ(a, csv_of(c, 1)) << to_string(p);
    EXPECT_NE(a, csv_of(c, 2)) << to_string(p);
  }
}

TEST(Run, RecordsSatisfyConstraints) {
  SimConfig c = parse_config(scalar_doc());
  const auto trace = collect(c, 3);
  ASSERT_EQ(trace.size(), 300u);
  for (const auto& r : trace) {
    r.allocation.validate(3, 2);
    for (std::size_t p = 0; p < r.allocation.size(); ++p) {
      const int i = r.allocation.pairs()[p].subsystem;
      if (r.gamma[p]) EXPECT_TRUE(r.theta[i]);
    }
    for (int i = 0; i < 3; ++i) {
      if (r.theta[i]) EXPECT_EQ(r.age[i], 0);
      if (!r.allocation.channel_of(i)) EXPECT_FALSE(r.theta[i]);
    }
    EXPECT_EQ(r.warmup, r.slot < 6);
    if (r.warmup) EXPECT_EQ(r.allocation.size(), 1u);
  }
}

TEST(Run, RegretRecomputation) {
  SimConfig c = parse_config(scalar_doc());
  RunSummary s;
  const auto trace = collect(c, 4, &s);
  std::vector<SubsystemModel> models;
  for (const auto& sp : c.subsystems) models.emplace_back(sp);
  const auto series = compute_regret(trace, LinkQualityMatrix(c.q), models);
  double total = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    EXPECT_NEAR(series.regret[k], trace[k].regret, 1e-12);
    EXPECT_NEAR(series.cost_regret[k], trace[k].cost_regret, 1e-9 * std::max(1.0, std::abs(trace[k].cost_regret)));
    EXPECT_GE(trace[k].regret, -1e-12);
    total += series.regret[k];
  }
  EXPECT_NEAR(total, s.cumulative_regret, 1e-9);
}

TEST(Regret, OraclePoliciesHaveZeroRegret) {
  const std::vector<SubsystemModel> models(3, SubsystemModel(presets::segway()));
  std::vector<CoilTable> tables;
  for (const auto& m : models) tables.emplace_back(m);
  const LinkQualityMatrix q(presets::table1_link_quality());
  for (const auto& ages : {std::vector<int>{0, 0, 0}, std::vector<int>{2, 0, 5}, std::vector<int>{1, 7, 0}}) {
    EXPECT_EQ(regret_terms(tables, ages, hungarian(q.matrix()), q).regret, 0.0);
    const Allocation best = hungarian(coil_weighted(tables, ages, q.matrix()));
    EXPECT_EQ(regret_terms(tables, ages, best, q).cost_regret, 0.0);
  }
}

TEST(Run, PerfectLinksApproachLqgCost) {
  SimConfig c;
  c.subsystems = {presets::scalar_fixture(), presets::scalar_fixture()};
  c.q = MatrixXd::Ones(2, 2);
  c.horizon = 20000;
  const RunSummary s = run(c, 11);
  const double target = 2 * SubsystemModel(presets::scalar_fixture()).perfect_link_cost();
  EXPECT_NEAR(s.average_cost, target, 0.05 * target);
  EXPECT_NEAR(s.average_expected_cost, target, 1e-9 * target);
  EXPECT_EQ(s.mean_age[0], 0.0);
}

TEST(Run, CommonRandomNumbersAcrossPolicies) {
  // With q = 1 every policy delivers, so plant trajectories coincide.
  SimConfig c;
  c.subsystems = {presets::scalar_fixture(), presets::scalar_fixture()};
  c.q = MatrixXd::Ones(2, 2);
  c.horizon = 200;
  SimConfig d = c;
  d.policy = Policy::kRoundRobin;
  const auto a = collect(c, 5);
  const auto b = collect(d, 5);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].stage_cost, b[k].stage_cost);
}

TEST(RunMany, IndependentOfThreadCount) {
  SimConfig c = parse_config(scalar_doc());
  c.seeds = {3, 1, 4, 1, 5};
  const auto one = run_many(c, 1);
  const auto four = run_many(c, 4);
  ASSERT_EQ(one.size(), 5u);
  for (std::size_t k = 0; k < one.size(); ++k) {
    EXPECT_EQ(one[k].seed, c.seeds[k]);
    EXPECT_EQ(dump_json(summary_to_json(one[k])), dump_json(summary_to_json(four[k])));
  }
}

TEST(Report, CsvShape) {
  SimConfig c = parse_config(scalar_doc());
  c.policy = Policy::kKnownQ;
  c.horizon = 2;
  const std::string csv = csv_of(c, 1);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "record,slot,subsystem,channel,gamma,theta,age,stage_cost,cov_trace,expected_stage_cost,regret,"
            "cost_regret,pairs,warmup");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 13) << line;
  }
  EXPECT_EQ(rows, 2 * (1 + 3));
}

TEST(Report, JsonTraceParses) {
  SimConfig c = parse_config(scalar_doc());
  c.horizon = 10;
  std::ostringstream os;
  auto w = make_json_writer(os, 3, 2);
  run(c, 1, [&](const TraceRecord& r) { w->write(r); });
  w->finish();
  const json j = json::parse(os.str());
  ASSERT_EQ(j.size(), 10u);
  EXPECT_EQ(j[9]["slot"], 9);
  EXPECT_EQ(j[0]["age"].size(), 3u);
}

TEST(Report, RejectsInvalidRecord) {
  std::ostringstream os;
  auto w = make_csv_writer(os, 2, 1);
  TraceRecord r;
  r.allocation.assign(0, 1);
  r.gamma = {true};
  r.theta = {true, false};
  r.age = {0, 1};
  r.stage_cost = {0, 0};
  r.cov_trace = {0, 0};
  EXPECT_THROW(w->write(r), Error);
}

TEST(Report, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(dump_json(json{{"x", 0.1}}, -1), "{\"x\":0.10000000000000001}");
  EXPECT_EQ(dump_json(json{{"x", std::numeric_limits<double>::infinity()}}, -1), "{\"x\":null}");
  const json round = json::parse(dump_json(json{{"v", {1.0 / 3.0, 2.5}}, {"s", "a\"b"}}));
  EXPECT_EQ(round["v"][0].get<double>(), 1.0 / 3.0);
  EXPECT_EQ(round["s"], "a\"b");
}

TEST(Sweep, Instances) {
  SimConfig c = parse_config(scalar_doc());
  c.sweep.parameter = "n_subsystems";
  c.sweep.channel_ratio = 0.75;
  const SimConfig inst = sweep_instance(c, 8);
  EXPECT_EQ(inst.subsystems.size(), 8u);
  EXPECT_EQ(inst.q.cols(), 6);
  EXPECT_GE(inst.q.minCoeff(), c.sweep.q_lo);
  EXPECT_LE(inst.q.maxCoeff(), c.sweep.q_hi);
  EXPECT_EQ(sweep_instance(c, 8).q, inst.q);
  c.sweep.parameter = "q_scale";
  EXPECT_LE(sweep_instance(c, 2.0).q.maxCoeff(), 1.0);
  EXPECT_THROW(sweep_instance(c, -1.0), Error);
}

TEST(Sweep, RunsGrid) {
  SimConfig c = parse_config(scalar_doc());
  c.horizon = 100;
  c.sweep.values = {0.5, 1.0};
  c.sweep.policies = {Policy::kKnownQ, Policy::kRoundRobin};
  const auto points = sweep(c, 1);
  ASSERT_EQ(points.size(), 4u);
  EXPECT_EQ(points[1].policy, Policy::kRoundRobin);
  EXPECT_GT(points[0].mean_cost, 0.0);
}
