#include "wncs/presets.hpp"

#include "wncs/error.hpp"

namespace wncs::presets {

SubsystemSpec segway() {
  SubsystemSpec s;
  s.A.resize(4, 4);
  s.A << 1, 0.0088, 0.0193, 0.0007,
         0, 1.0110, 0.0004, 0.0196,
         0, 0.8788, 0.9280, 0.0729,
         0, 1.1009, 0.0372, 0.9681;
  s.B.resize(4, 1);
  s.B << 0.0009, -0.0006, 0.0925, -0.0620;
  s.C.resize(2, 4);
  s.C << 1, 0, 0, 0,
         0, 1, 0, 0;
  s.W = 0.1 * Eigen::MatrixXd::Identity(4, 4);
  s.V = 0.01 * Eigen::MatrixXd::Identity(2, 2);
  s.Q = Eigen::MatrixXd::Identity(4, 4);
  s.R = Eigen::MatrixXd::Constant(1, 1, 0.1);
  return s;
}

SubsystemSpec scalar(double a, double b, double c, double w, double v, double q, double r) {
  const auto one = [](double x) { return Eigen::MatrixXd::Constant(1, 1, x); };
  SubsystemSpec s;
  s.A = one(a);
  s.B = one(b);
  s.C = one(c);
  s.W = one(w);
  s.V = one(v);
  s.Q = one(q);
  s.R = one(r);
  return s;
}

SubsystemSpec scalar_fixture() { return scalar(2, 1, 1, 1, 1, 1, 1); }

Eigen::MatrixXd table1_link_quality() {
  Eigen::MatrixXd q(3, 2);
  q << 0.95, 0.81,
       0.70, 0.65,
       0.80, 0.96;
  return q;
}

std::vector<std::string> names() { return {"fig6-stable", "fig7-unstable", "table1-learning", "fig5-regret"}; }

SimConfig preset_config(const std::string& name) {
  SimConfig c;
  if (name == "fig6-stable" || name == "fig7-unstable") {
    c.subsystems = {segway(), segway()};
    c.q.resize(2, 1);
    c.q << (name == "fig6-stable" ? 0.40 : 0.20), 0.44;
    c.policy = Policy::kKnownQ;
    c.horizon = 100000;
    c.seeds = {1};
    c.stability.m_bar = 52;
    c.stability.params = {100.0, 2.0, 4, GrowthMeasure::kSpectralRadius};
    return c;
  }
  if (name == "table1-learning" || name == "fig5-regret") {
    c.subsystems = {segway(), segway(), segway()};
    c.q = table1_link_quality();
    c.policy = Policy::kCoilQhat;
    c.horizon = 100000;
    c.seeds = {1};
    return c;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown preset '" + name + "'", "preset");
}

}  // namespace wncs::presets
