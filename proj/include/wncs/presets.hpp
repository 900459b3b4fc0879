#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wncs/config.hpp"
#include "wncs/plant.hpp"

namespace wncs::presets {

/// Two-wheeled balancing robot sampled at 0.02 s: states are wheel angle,
/// tilt angle and their rates; the input is motor voltage; encoder and IMU
/// measure the two angles. W = 0.1 I, V = 0.01 I, Q = I, R = 0.1.
SubsystemSpec segway();

/// 1x1 loop.
SubsystemSpec scalar(double a, double b, double c, double w, double v, double q, double r);

/// a = 2, b = c = w = v = Q = R = 1. P_bar = (1 + sqrt 5) / 4, Pi = 2 + sqrt 5.
SubsystemSpec scalar_fixture();

/// Success probabilities for three subsystems (rows) on two channels.
Eigen::MatrixXd table1_link_quality();

/// Names accepted by preset_config().
std::vector<std::string> names();

/// fig6-stable, fig7-unstable: segway pair on one channel.
/// table1-learning, fig5-regret: three segways on the two-channel links.
/// Throws Error(kInvalidConfig) for unknown names.
SimConfig preset_config(const std::string& name);

}  // namespace wncs::presets
