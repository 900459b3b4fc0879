#pragma once

#include <random>

#include <Eigen/Dense>

#include "wncs/plant.hpp"

namespace wncs::test {

inline Eigen::MatrixXd gaussian(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& gen, Eigen::Index n, double ridge = 0.0) {
  const Eigen::MatrixXd g = gaussian(gen, n, n);
  return g * g.transpose() + ridge * Eigen::MatrixXd::Identity(n, n);
}

// Open-loop unstable, generically controllable and observable.
inline SubsystemSpec random_spec(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_real_distribution<double> radius(1.05, 1.6);
  const int n = dim(gen);
  SubsystemSpec s;
  Eigen::MatrixXd a = gaussian(gen, n, n);
  const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
  s.A = a * (radius(gen) / rho);
  s.B = gaussian(gen, n, 1);
  s.C = gaussian(gen, 1, n);
  s.W = random_psd(gen, n, 0.1);
  s.V = Eigen::MatrixXd::Constant(1, 1, 0.5);
  s.Q = Eigen::MatrixXd::Identity(n, n);
  s.R = Eigen::MatrixXd::Constant(1, 1, 1.0);
  return s;
}

// Segway values from an independent Riccati solver (row-major).
inline Eigen::MatrixXd row_major(int r, int c, std::initializer_list<double> v) {
  Eigen::MatrixXd m(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

inline Eigen::MatrixXd segway_pi() {
  return row_major(4, 4, {65.851825363661945, 256.38308535809671, 14.799815160406904, 27.442754943750771,
                          256.38308535809671, 5978.5546468718821, 272.2319752944826, 628.20730021020154,
                          14.799815160406904, 272.2319752944826, 15.611879150317147, 29.217340921292969,
                          27.442754943750771, 628.20730021020154, 29.217340921292969, 69.211283276275964});
}

inline Eigen::MatrixXd segway_l() {
  return row_major(1, 4, {2.3417497474582669, 109.16655745044683, 3.1116638037134412, 12.351997871090733});
}

inline Eigen::MatrixXd segway_pbar() {
  return row_major(4, 4, {0.0091717855418480404, 1.1001977844794135e-05, 0.006005521371126199, 0.0056932268727346441,
                          1.1001977844794352e-05, 0.0091750537479179661, 0.0064429342966756259, 0.0078298840025524952,
                          0.006005521371126199, 0.0064429342966756398, 3.3862695737425113, 3.1475917381343002,
                          0.0056932268727346441, 0.0078298840025524952, 3.1475917381343002, 3.899594403933424});
}

inline constexpr double kSegwayRadius = 1.1539295565855985;
inline constexpr double kSegwayTraceGamma = 2203.7808191056383;
inline constexpr double kSegwayPerfectCost = 796.1941421174988;

}  // namespace wncs::test
