// Copyright 2026 the mtt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "mtt/types.hpp"

namespace mtt {

/// Below this range [m] the line of sight is undefined.
inline constexpr double kMinBearingRange = 0.1;

inline Eigen::Matrix2d rotation2d(double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

/// Rigid transform of an ego-frame point into the global frame.
inline Eigen::Vector2d local_to_global(const Eigen::Vector2d & local, const EgoState & ego)
{
  return ego.position() + rotation2d(ego.theta) * local;
}

/// Inverse transform of a global point into the ego frame.
inline Eigen::Vector2d global_to_local(const Eigen::Vector2d & global, const EgoState & ego)
{
  return rotation2d(-ego.theta) * (global - ego.position());
}

/// Global position of a measurement, using the ego pose captured at the
/// physical measurement instant.
inline Eigen::Vector2d to_global(const Measurement & m)
{
  return local_to_global(m.position_local, m.ego_at_meas);
}

/// Measurement noise rotated from the ego frame into the global frame. The
/// range-rate variance (RADAR row 3) is frame independent and left untouched.
inline Eigen::MatrixXd measurement_noise_global(const Measurement & m)
{
  Eigen::MatrixXd r = m.noise;
  const Eigen::Matrix2d rot = rotation2d(m.ego_at_meas.theta);
  r.topLeftCorner<2, 2>() = rot * m.noise.topLeftCorner<2, 2>() * rot.transpose();
  return r;
}

/// Bearing angle of a global target position in the ego frame: zero dead
/// ahead, positive to the left.
inline double bearing(const Eigen::Vector2d & target_global, const EgoState & ego)
{
  const Eigen::Vector2d local = global_to_local(target_global, ego);
  if (local.norm() <= kMinBearingRange) {
    throw std::invalid_argument("bearing: target within minimum range of ego");
  }
  return std::atan2(local.y(), local.x());
}

/// Range rate along the line of sight at bearing alpha: the relative
/// EGO-target velocity projected on the LOS. Negative means closing.
inline double range_rate(const TargetState & state, const EgoState & ego, double alpha)
{
  const double ct = std::cos(state.theta);
  const double st = std::sin(state.theta);
  const double ce = std::cos(ego.theta);
  const double se = std::sin(ego.theta);
  return (-state.v * ct * se + state.v * st * ce) * std::sin(alpha) +
         (state.v * ct * ce + state.v * st * se - ego.v) * std::cos(alpha);
}

/// LiDAR output map: the first two states.
inline Eigen::Vector2d lidar_output(const TargetState & state) { return {state.x, state.y}; }

inline Eigen::Matrix<double, 2, 4> lidar_matrix()
{
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return h;
}

/// RADAR predicted output [x, y, range rate], with the bearing evaluated at
/// the predicted track position.
inline Eigen::Vector3d radar_output(const TargetState & state, const EgoState & ego)
{
  const double alpha = bearing(state.position(), ego);
  return {state.x, state.y, range_rate(state, ego, alpha)};
}

/// Linearized RADAR measurement matrix. Rows 1-2 match the LiDAR map; row 3
/// carries the range-rate partials in v and theta with the bearing held at its
/// evaluated value (its sensitivity to x, y is second order at racing ranges).
inline Eigen::Matrix<double, 3, 4> radar_matrix(const TargetState & state, const EgoState & ego)
{
  const double alpha = bearing(state.position(), ego);
  Eigen::Matrix<double, 3, 4> h = Eigen::Matrix<double, 3, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  // dRr/dv = cos(theta - theta_E - alpha), dRr/dtheta = -v sin(theta - theta_E - alpha)
  const double rel = state.theta - ego.theta - alpha;
  h(2, 2) = std::cos(rel);
  h(2, 3) = -state.v * std::sin(rel);
  return h;
}

}  // namespace mtt
