#include "wncs/plant.hpp"

#include <sstream>

#include "wncs/error.hpp"
#include "wncs/mat.hpp"

namespace wncs {

namespace {

void require_finite(const MatrixXd& m, const char* name) {
  if (m.size() == 0) throw Error(ErrorCode::kDimensionMismatch, std::string(name) + " is empty", name);
  if (!m.allFinite()) throw Error(ErrorCode::kInvalidArgument, std::string(name) + " has non-finite entries", name);
}

void require_psd(const MatrixXd& m, const char* name, bool strict) {
  const double tol = 1e-9 * std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > tol) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be symmetric", name);
  }
  const double lo = min_eigenvalue(m);
  if (strict ? !(lo > 0.0) : lo < -tol) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(name) + (strict ? " must be positive definite" : " must be positive semi-definite"),
                name);
  }
}

}  // namespace

SubsystemModel::SubsystemModel(SubsystemSpec spec) : spec_(std::move(spec)) {
  auto& s = spec_;
  for (auto [m, name] : {std::pair{&s.A, "A"}, {&s.B, "B"}, {&s.C, "C"}, {&s.W, "W"},
                         {&s.V, "V"}, {&s.Q, "Q"}, {&s.R, "R"}}) {
    require_finite(*m, name);
  }
  const Eigen::Index n = s.A.rows();
  internal::require_square(s.A, "A");
  internal::require_shape(s.B, n, s.B.cols(), "B");
  internal::require_shape(s.C, s.C.rows(), n, "C");
  internal::require_shape(s.W, n, n, "W");
  internal::require_shape(s.V, s.C.rows(), s.C.rows(), "V");
  internal::require_shape(s.Q, n, n, "Q");
  internal::require_shape(s.R, s.B.cols(), s.B.cols(), "R");
  if (s.x0_mean.size() == 0) s.x0_mean = VectorXd::Zero(n);
  if (s.X0.size() == 0) s.X0 = MatrixXd::Zero(n, n);
  if (s.x0_mean.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "x0 must have the state dimension", "x0");
  }
  internal::require_shape(s.X0, n, n, "X0");

  require_psd(s.W, "W", false);
  require_psd(s.V, "V", true);
  require_psd(s.Q, "Q", false);
  require_psd(s.R, "R", true);
  require_psd(s.X0, "X0", false);
  s.W = symmetrize(s.W);
  s.V = symmetrize(s.V);
  s.Q = symmetrize(s.Q);
  s.R = symmetrize(s.R);
  s.X0 = symmetrize(s.X0);

  open_loop_radius_ = spectral_radius(s.A);
  if (!(open_loop_radius_ > 1.0)) {
    std::ostringstream os;
    os << "sigma_max(A) = " << open_loop_radius_ << " <= 1; the loop is not open-loop unstable";
    warnings_.push_back(os.str());
  }
  if (!is_observable(s.A, s.C)) warnings_.push_back("(A, C) fails the observability rank test");
  W_sqrt_ = psd_sqrt(s.W);
  V_sqrt_ = psd_sqrt(s.V);
  if (!is_controllable(s.A, W_sqrt_)) warnings_.push_back("(A, W^1/2) fails the controllability rank test");
  if (!is_controllable(s.A, s.B)) warnings_.push_back("(A, B) fails the controllability rank test");
  if (!is_observable(s.A, psd_sqrt(s.Q))) warnings_.push_back("(A, Q^1/2) fails the observability rank test");

  const auto filter = steady_state_error_cov(s.A, s.C, s.W, s.V);
  P_bar_ = filter.P;
  filter_residual_ = filter.residual;
  P_prior_ = h_map(s.A, s.W, P_bar_);
  const MatrixXd S = symmetrize(s.C * P_prior_ * s.C.transpose() + s.V);
  K_bar_ = S.ldlt().solve(s.C * P_prior_).transpose();

  const auto dare = solve_dare(s.A, s.B, s.Q, s.R);
  Pi_ = dare.Pi;
  L_ = dare.L;
  Gamma_ = dare.Gamma;
  dare_residual_ = dare.residual;
  closed_loop_radius_ = dare.closed_loop_radius;
  A_cl_ = s.A + s.B * L_;
}

double SubsystemModel::perfect_link_cost() const {
  return (Pi_ * spec_.W).trace() + (Gamma_ * P_bar_).trace();
}

MatrixXd SubsystemModel::covariance_at_age(int t) const {
  return h_power(spec_.A, spec_.W, P_bar_, t);
}

namespace {

VectorXd measure(const SubsystemModel& model, const VectorXd& x, const CounterRng& rng,
                 int subsystem, std::uint64_t slot) {
  const auto p = model.output_dim();
  const VectorXd v = model.V_sqrt() *
                     rng.normal_vector({StreamRole::kMeasurementNoise, static_cast<std::uint32_t>(subsystem)},
                                       slot * static_cast<std::uint64_t>(p), p);
  return model.C() * x + v;
}

}  // namespace

PlantState initial_state(const SubsystemModel& model, const CounterRng& rng, int subsystem) {
  const auto n = model.state_dim();
  PlantState st;
  const VectorXd z = rng.normal_vector({StreamRole::kInitialState, static_cast<std::uint32_t>(subsystem)}, 0, n);
  st.x = model.spec().x0_mean + psd_sqrt(model.spec().X0) * z;
  const VectorXd& prior = model.spec().x0_mean;
  const VectorXd y = measure(model, st.x, rng, subsystem, 0);
  st.x_sensor = prior + model.K_bar() * (y - model.C() * prior);
  st.x_hat = st.x_sensor;
  st.u = VectorXd::Zero(model.input_dim());
  st.age = 0;
  st.P = model.P_bar();
  return st;
}

VectorXd sensor_update(const SubsystemModel& model, const VectorXd& x_sensor, const VectorXd& u,
                       const VectorXd& y) {
  const VectorXd pred = model.A() * x_sensor + model.B() * u;
  return pred + model.K_bar() * (y - model.C() * pred);
}

void estimator_update(const SubsystemModel& model, PlantState& state,
                      const std::optional<VectorXd>& received) {
  if (received) {
    state.x_hat = *received;
    state.age = 0;
    state.P = model.P_bar();
  } else {
    state.x_hat = model.A_cl() * state.x_hat;
    state.age += 1;
    state.P = h_map(model.A(), model.W(), state.P);
  }
#ifndef NDEBUG
  const MatrixXd fresh = model.covariance_at_age(state.age);
  if ((fresh - state.P).norm() > 1e-9 * std::max(1.0, fresh.norm())) {
    throw Error(ErrorCode::kInvalidArgument, "cached covariance drifted from h^t(P_bar)");
  }
#endif
}

double step(const SubsystemModel& model, PlantState& state, const CounterRng& rng, int subsystem,
            std::uint64_t slot) {
  const auto n = model.state_dim();
  state.u = model.L() * state.x_hat;
  const double cost = state.x.dot(model.Q() * state.x) + state.u.dot(model.R() * state.u);
  const VectorXd w = model.W_sqrt() *
                     rng.normal_vector({StreamRole::kProcessNoise, static_cast<std::uint32_t>(subsystem)},
                                       slot * static_cast<std::uint64_t>(n), n);
  state.x = model.A() * state.x + model.B() * state.u + w;
  const VectorXd y = measure(model, state.x, rng, subsystem, slot + 1);
  state.x_sensor = sensor_update(model, state.x_sensor, state.u, y);
  return cost;
}

}  // namespace wncs
