#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wncs/rng.hpp"

namespace wncs {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Plant, noise and cost description of one control loop.
struct SubsystemSpec {
  MatrixXd A, B, C, W, V, Q, R;
  VectorXd x0_mean;  ///< Empty means zero.
  MatrixXd X0;       ///< Empty means zero.
};

/// A control loop with its steady-state filter and LQR quantities solved once
/// at construction. Immutable afterwards.
class SubsystemModel {
 public:
  /// Validates shapes and definiteness, then solves both Riccati equations.
  /// Throws Error on invalid input; soft assumption failures (sigma_max(A) <= 1,
  /// rank tests) are recorded in warnings().
  explicit SubsystemModel(SubsystemSpec spec);

  const SubsystemSpec& spec() const { return spec_; }
  const MatrixXd& A() const { return spec_.A; }
  const MatrixXd& B() const { return spec_.B; }
  const MatrixXd& C() const { return spec_.C; }
  const MatrixXd& W() const { return spec_.W; }
  const MatrixXd& V() const { return spec_.V; }
  const MatrixXd& Q() const { return spec_.Q; }
  const MatrixXd& R() const { return spec_.R; }
  Eigen::Index state_dim() const { return spec_.A.rows(); }
  Eigen::Index input_dim() const { return spec_.B.cols(); }
  Eigen::Index output_dim() const { return spec_.C.rows(); }

  /// Steady-state a posteriori sensor covariance.
  const MatrixXd& P_bar() const { return P_bar_; }
  /// h(P_bar), the steady-state a priori covariance.
  const MatrixXd& P_prior() const { return P_prior_; }
  /// Steady-state Kalman gain.
  const MatrixXd& K_bar() const { return K_bar_; }
  const MatrixXd& Pi() const { return Pi_; }
  const MatrixXd& L() const { return L_; }
  const MatrixXd& Gamma() const { return Gamma_; }
  /// A + B L.
  const MatrixXd& A_cl() const { return A_cl_; }
  const MatrixXd& W_sqrt() const { return W_sqrt_; }
  const MatrixXd& V_sqrt() const { return V_sqrt_; }

  double filter_residual() const { return filter_residual_; }
  double dare_residual() const { return dare_residual_; }
  double closed_loop_radius() const { return closed_loop_radius_; }
  double open_loop_radius() const { return open_loop_radius_; }
  /// tr(Pi W) + tr(Gamma P_bar): stage cost under perfect communication.
  double perfect_link_cost() const;

  /// h^t(P_bar), recomputed from scratch.
  MatrixXd covariance_at_age(int t) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  SubsystemSpec spec_;
  MatrixXd P_bar_, P_prior_, K_bar_, Pi_, L_, Gamma_, A_cl_, W_sqrt_, V_sqrt_;
  double filter_residual_ = 0.0;
  double dare_residual_ = 0.0;
  double closed_loop_radius_ = 0.0;
  double open_loop_radius_ = 0.0;
  std::vector<std::string> warnings_;
};

/// Run-owned state of one loop: true state, both estimates and the
/// controller-side covariance cache.
struct PlantState {
  VectorXd x;         ///< True state.
  VectorXd x_sensor;  ///< Sensor posterior estimate, the packet payload.
  VectorXd x_hat;     ///< Controller-side estimate.
  VectorXd u;         ///< Last applied input.
  int age = 0;        ///< Slots since the last delivered packet.
  MatrixXd P;         ///< h^age(P_bar); only ever advanced by estimator_update.
};

/// Draws x_0 ~ N(x0_mean, X0), measures y_0 and runs the first sensor
/// correction from the prior x0_mean. The controller estimate starts at the
/// sensor estimate with age 0.
PlantState initial_state(const SubsystemModel& model, const CounterRng& rng, int subsystem);

/// Steady-state Kalman step: predict with the last input, correct with y.
VectorXd sensor_update(const SubsystemModel& model, const VectorXd& x_sensor, const VectorXd& u,
                       const VectorXd& y);

/// Controller-side hold-and-predict update for one slot. A delivered packet
/// resets the estimate and age; a miss propagates through A + BL and h.
void estimator_update(const SubsystemModel& model, PlantState& state,
                      const std::optional<VectorXd>& received);

/// Applies u = L x_hat, returns x^T Q x + u^T R u for the current slot, then
/// advances the plant and the sensor filter to slot + 1 using the
/// subsystem's process and measurement substreams.
double step(const SubsystemModel& model, PlantState& state, const CounterRng& rng, int subsystem,
            std::uint64_t slot);

}  // namespace wncs
