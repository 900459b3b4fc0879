#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "wncs/error.hpp"
#include "wncs/network.hpp"
#include "wncs/oracle.hpp"

using namespace wncs;
using Eigen::MatrixXd;

namespace {

MatrixXd uniform_matrix(std::mt19937_64& gen, int n, int m, double lo = 0.01, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  MatrixXd x(n, m);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = u(gen);
  return x;
}

void expect_valid(const Allocation& a, int n, int m) {
  std::set<int> subs, chans;
  for (const auto& p : a.pairs()) {
    EXPECT_TRUE(subs.insert(p.subsystem).second);
    EXPECT_TRUE(chans.insert(p.channel).second);
    EXPECT_LT(p.subsystem, n);
    EXPECT_LT(p.channel, m);
  }
  EXPECT_EQ(a.size(), static_cast<std::size_t>(std::min(n, m)));
}

}  // namespace

TEST(LinkQuality, RejectsOutOfRange) {
  EXPECT_THROW(LinkQualityMatrix(MatrixXd::Zero(1, 1)), Error);
  EXPECT_THROW(LinkQualityMatrix(MatrixXd::Constant(1, 1, 1.2)), Error);
  EXPECT_NO_THROW(LinkQualityMatrix(MatrixXd::Ones(2, 2)));
}

TEST(Allocation, RejectsDuplicates) {
  Allocation a;
  a.assign(0, 0);
  EXPECT_THROW(a.assign(0, 1), Error);
  EXPECT_THROW(a.assign(1, 0), Error);
  EXPECT_EQ(a.channel_of(0), 0);
  EXPECT_EQ(a.subsystem_on(0), 0);
  EXPECT_FALSE(a.channel_of(1).has_value());
}

TEST(ComputeTimers, Arithmetic) {
  const MatrixXd costs = (MatrixXd(2, 2) << 1, 2, 4, 8).finished();
  const MatrixXd expect = (MatrixXd(2, 2) << 8, 4, 2, 1).finished();
  EXPECT_EQ(compute_timers(costs, 8.0), expect);
}

TEST(ComputeTimers, CoilFixture) {
  const MatrixXd costs = (MatrixXd(1, 2) << 46.979 * 0.4, 46.979 * 0.44).finished();
  const MatrixXd tau = compute_timers(costs, 1.0);
  EXPECT_NEAR(tau(0, 0), 1 / 18.7916, 1e-6);
  EXPECT_NEAR(tau(0, 1), 1 / 20.67076, 1e-6);
}

TEST(ComputeTimers, NonpositiveCost) {
  EXPECT_THROW(compute_timers(MatrixXd::Zero(1, 1), 1.0), Error);
}

TEST(ResolveContention, HandTraces) {
  const MatrixXd tau = (MatrixXd(3, 2) << 1, 2, 3, 4, 5, 6).finished();
  Allocation expect;
  expect.assign(0, 0);
  expect.assign(1, 1);
  EXPECT_EQ(resolve_contention(tau), expect);

  const MatrixXd col = (MatrixXd(3, 1) << 3, 2, 5).finished();
  const Allocation a = resolve_contention(col);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a.pairs()[0].subsystem, 1);
}

TEST(ResolveContention, TiesBreakByIndex) {
  const MatrixXd tau = MatrixXd::Ones(3, 2);
  const Allocation a = resolve_contention(tau);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a.pairs()[0], (Assignment{0, 0}));
  EXPECT_EQ(a.pairs()[1], (Assignment{1, 1}));
  // A tie rank overrides the index order.
  const MatrixXd rank = (MatrixXd(3, 2) << 0.9, 0.1, 0.5, 0.5, 0.0, 0.7).finished();
  const Allocation b = resolve_contention(tau, &rank);
  EXPECT_EQ(b.pairs()[0], (Assignment{2, 0}));
  EXPECT_EQ(b.pairs()[1], (Assignment{0, 1}));
}

TEST(ResolveContention, RandomConstraintsAndScaleInvariance) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + trial % 6;
    const int m = 1 + (trial / 6) % 5;
    const MatrixXd tau = uniform_matrix(gen, n, m);
    const Allocation a = resolve_contention(tau);
    expect_valid(a, n, m);
    EXPECT_EQ(resolve_contention(tau * 3.7), a);
  }
}

TEST(ResolveContention, SingleChannelPicksArgmax) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + trial % 7;
    const MatrixXd w = uniform_matrix(gen, n, 1);
    Eigen::Index best;
    w.col(0).maxCoeff(&best);
    const Allocation a = resolve_contention(compute_timers(w, 1.0));
    EXPECT_EQ(a.pairs()[0].subsystem, best);
  }
}

TEST(ResolveContention, GreedyIsLocallyOptimalAndBelowHungarian) {
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + trial % 4;
    const int m = 2 + (trial / 4) % 3;
    const MatrixXd w = uniform_matrix(gen, n, m);
    const Allocation a = resolve_contention(compute_timers(w, 1.0));
    EXPECT_LE(a.value(w), hungarian(w).value(w) + 1e-12);
    EXPECT_EQ(w.maxCoeff(), w(a.pairs()[0].subsystem, a.pairs()[0].channel));
    // Moving one pair to an idle subsystem or an idle channel never helps.
    for (const auto& p : a.pairs()) {
      for (int k = 0; k < n; ++k) {
        if (!a.channel_of(k)) EXPECT_GE(w(p.subsystem, p.channel), w(k, p.channel));
      }
      for (int c = 0; c < m; ++c) {
        if (!a.subsystem_on(c)) EXPECT_GE(w(p.subsystem, p.channel), w(p.subsystem, c));
      }
    }
  }
}

TEST(ResolveContention, GreedyCanLoseToAnExchange) {
  // Exchanging two winners' channels can help: greedy takes 1.0 + 0.0, the exchange gives 1.8.
  const MatrixXd w = (MatrixXd(2, 2) << 1.0, 0.9, 0.9, 0.01).finished();
  const Allocation a = resolve_contention(compute_timers(w, 1.0));
  EXPECT_NEAR(a.value(w), 1.01, 1e-15);
  EXPECT_NEAR(hungarian(w).value(w), 1.8, 1e-15);
}

TEST(Transmit, PerfectLinkAndUnallocated) {
  const LinkQualityMatrix q((MatrixXd(2, 1) << 1.0, 0.3).finished());
  const CounterRng rng(1);
  Allocation a;
  a.assign(0, 0);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const auto out = transmit(a, q, rng, k);
    EXPECT_TRUE(out.gamma[0]);
    EXPECT_TRUE(out.theta[0]);
    EXPECT_FALSE(out.theta[1]);
  }
}

TEST(Transmit, EmpiricalRate) {
  const LinkQualityMatrix q(MatrixXd::Constant(1, 1, 0.5));
  const CounterRng rng(2);
  int hits = 0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) hits += link_success(q, rng, 0, 0, k);
  EXPECT_LT(std::abs(hits / double(draws) - 0.5), 3 * std::sqrt(0.25 / draws));
}

TEST(Transmit, CommonRandomNumbers) {
  // The outcome of a link depends only on (seed, link, slot).
  const LinkQualityMatrix q(MatrixXd::Constant(3, 2, 0.6));
  const CounterRng rng(3);
  Allocation a, b;
  a.assign(2, 1);
  b.assign(0, 0);
  b.assign(2, 1);
  for (std::uint64_t k = 0; k < 500; ++k) {
    EXPECT_EQ(transmit(a, q, rng, k).theta[2], transmit(b, q, rng, k).theta[2]);
  }
}
