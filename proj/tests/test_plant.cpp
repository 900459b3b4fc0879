#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wncs/error.hpp"
#include "wncs/mat.hpp"
#include "wncs/plant.hpp"
#include "wncs/presets.hpp"

using namespace wncs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd v1(double x) { return VectorXd::Constant(1, x); }

// Batch-means standard error of the sample mean.
double batch_se(const std::vector<double>& x, int batches = 50) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    for (std::size_t k = 0; k < len; ++k) means[b] += x[b * len + k];
    means[b] /= static_cast<double>(len);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  return std::sqrt(var / (batches - 1) / batches);
}

}  // namespace

TEST(SubsystemModel, ScalarDerivedQuantities) {
  const SubsystemModel m(presets::scalar_fixture());
  const double r5 = std::sqrt(5.0);
  EXPECT_NEAR(m.P_bar()(0, 0), (1 + r5) / 4, 1e-12);
  EXPECT_NEAR(m.P_prior()(0, 0), 4.23607, 1e-5);
  EXPECT_NEAR(m.K_bar()(0, 0), 0.80902, 1e-5);
  EXPECT_NEAR(m.Pi()(0, 0), 2 + r5, 1e-10);
  EXPECT_NEAR(m.Gamma()(0, 0), 7 + 3 * r5, 1e-9);
  EXPECT_NEAR(m.A_cl()(0, 0), 0.38197, 1e-5);
  EXPECT_TRUE(m.warnings().empty());
}

TEST(SubsystemModel, GainIdentity) {
  for (const auto& spec : {presets::scalar_fixture(), presets::segway()}) {
    const SubsystemModel m(spec);
    const auto n = m.state_dim();
    const MatrixXd lhs = (MatrixXd::Identity(n, n) - m.K_bar() * m.C()) * m.P_prior();
    EXPECT_LT((lhs - g_map(m.C(), m.V(), m.P_prior())).norm(), 1e-9);
    EXPECT_LT((lhs - m.P_bar()).norm(), 1e-9);
  }
}

TEST(SubsystemModel, RejectsIndefiniteNoise) {
  auto s = presets::scalar_fixture();
  s.V = MatrixXd::Constant(1, 1, 0.0);
  EXPECT_THROW(SubsystemModel{s}, Error);
  s = presets::scalar_fixture();
  s.W = MatrixXd::Constant(1, 1, -1.0);
  EXPECT_THROW(SubsystemModel{s}, Error);
  s = presets::scalar_fixture();
  s.B = MatrixXd::Ones(2, 1);
  EXPECT_THROW(SubsystemModel{s}, Error);
}

TEST(SubsystemModel, StableOpenLoopWarns) {
  const SubsystemModel m(presets::scalar(0.5, 1, 1, 1, 1, 1, 1));
  EXPECT_FALSE(m.warnings().empty());
}

TEST(SensorUpdate, ZeroInnovationKeepsPrediction) {
  const SubsystemModel m(presets::segway());
  const VectorXd xs = (VectorXd(4) << 0.1, -0.2, 0.3, 0.05).finished();
  const VectorXd u = v1(0.7);
  const VectorXd pred = m.A() * xs + m.B() * u;
  EXPECT_LT((sensor_update(m, xs, u, m.C() * pred) - pred).norm(), 1e-14);
}

TEST(SensorUpdate, ScalarExample) {
  const SubsystemModel m(presets::scalar_fixture());
  EXPECT_NEAR(sensor_update(m, v1(0), v1(0), v1(1))(0), 0.80902, 1e-5);
}

TEST(EstimatorUpdate, ReceiptAndMisses) {
  const SubsystemModel m(presets::scalar_fixture());
  const CounterRng rng(1);
  PlantState st = initial_state(m, rng, 0);
  EXPECT_EQ(st.age, 0);
  estimator_update(m, st, std::nullopt);
  EXPECT_EQ(st.age, 1);
  EXPECT_NEAR(st.P(0, 0), 4.23607, 1e-5);
  estimator_update(m, st, std::nullopt);
  EXPECT_EQ(st.age, 2);
  EXPECT_NEAR(st.P(0, 0), 17.9443, 1e-4);
  const double held = st.x_hat(0);
  estimator_update(m, st, std::nullopt);
  EXPECT_NEAR(st.x_hat(0), m.A_cl()(0, 0) * held, 1e-15);
  estimator_update(m, st, v1(3.25));
  EXPECT_EQ(st.age, 0);
  EXPECT_EQ(st.x_hat(0), 3.25);
  EXPECT_EQ(st.P(0, 0), m.P_bar()(0, 0));
}

TEST(EstimatorUpdate, CachedCovarianceMatchesScratch) {
  const SubsystemModel m(presets::segway());
  const CounterRng rng(3);
  PlantState st = initial_state(m, rng, 0);
  for (int k = 0; k < 30; ++k) {
    std::optional<VectorXd> rx;
    if (k % 7 == 6) rx = st.x_sensor;
    estimator_update(m, st, rx);
    const MatrixXd fresh = m.covariance_at_age(st.age);
    EXPECT_LT((fresh - st.P).norm(), 1e-9 * fresh.norm());
  }
}

TEST(Step, NoiselessZeroStaysZero) {
  auto spec = presets::scalar_fixture();
  spec.W = MatrixXd::Zero(1, 1);
  const SubsystemModel m(spec);
  const CounterRng rng(4);
  PlantState st = initial_state(m, rng, 0);
  st.x.setZero();
  st.x_hat.setZero();
  for (std::uint64_t k = 0; k < 20; ++k) {
    EXPECT_EQ(step(m, st, rng, 0, k), 0.0);
    EXPECT_EQ(st.x(0), 0.0);
  }
}

TEST(Step, DeterministicPropagationWithoutInput) {
  auto spec = presets::segway();
  spec.W = MatrixXd::Zero(4, 4);
  const SubsystemModel m(spec);
  const CounterRng rng(4);
  PlantState st = initial_state(m, rng, 0);
  st.x = (VectorXd(4) << 0.01, 0.02, -0.01, 0.0).finished();
  st.x_hat.setZero();
  const VectorXd expected = m.A() * st.x;
  step(m, st, rng, 0, 0);
  EXPECT_LT((st.x - expected).norm(), 1e-15);
}

TEST(Step, SameSeedSameDraws) {
  const SubsystemModel m(presets::segway());
  const CounterRng rng(9);
  PlantState a = initial_state(m, rng, 1);
  PlantState b = initial_state(m, rng, 1);
  for (std::uint64_t k = 0; k < 50; ++k) EXPECT_EQ(step(m, a, rng, 1, k), step(m, b, rng, 1, k));
  PlantState c = initial_state(m, rng, 2);
  EXPECT_NE(step(m, a, rng, 1, 50), step(m, c, rng, 2, 50));
}

TEST(Step, PerfectLinkMeanCost) {
  const SubsystemModel m(presets::scalar_fixture());
  const CounterRng rng(21);
  PlantState st = initial_state(m, rng, 0);
  const int slots = 100000;
  std::vector<double> costs;
  costs.reserve(slots);
  for (int k = 0; k < slots; ++k) {
    estimator_update(m, st, st.x_sensor);
    costs.push_back(step(m, st, rng, 0, k));
  }
  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= slots;
  const double target = m.perfect_link_cost();
  EXPECT_NEAR(target, (2 + std::sqrt(5.0)) + (7 + 3 * std::sqrt(5.0)) * (1 + std::sqrt(5.0)) / 4, 1e-9);
  EXPECT_LT(std::abs(mean - target), 3 * batch_se(costs)) << mean << " vs " << target;
}
