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
#include <cstdint>
#include <optional>

namespace mtt {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a)
{
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) {
    a += 2.0 * kPi;
  } else if (a > kPi) {
    a -= 2.0 * kPi;
  }
  return a;
}

/// Shortest signed angular difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

/// CVTR state of one tracked vehicle: pose and signed speed in the global frame.
struct TargetState
{
  double x{0.0};      // [m]
  double y{0.0};      // [m]
  double v{0.0};      // [m/s] signed speed
  double theta{0.0};  // [rad] heading, wrapped to (-pi, pi]

  Eigen::Vector2d position() const { return {x, y}; }
  Eigen::Vector4d vec() const { return {x, y, v, theta}; }

  static TargetState from_vec(const Eigen::Vector4d & s)
  {
    return {s(0), s(1), s(2), wrap_angle(s(3))};
  }

  bool finite() const
  {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(v) && std::isfinite(theta);
  }
};

/// Pose and speed of the sensing vehicle, assumed known (e.g. from INS/GNSS).
struct EgoState
{
  double x{0.0};      // [m]
  double y{0.0};      // [m]
  double v{0.0};      // [m/s]
  double theta{0.0};  // [rad] in (-pi, pi]

  Eigen::Vector2d position() const { return {x, y}; }

  bool finite() const
  {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(v) && std::isfinite(theta);
  }
};

enum class SensorKind : std::uint8_t { kLidar, kRadar };

inline const char * to_string(SensorKind k)
{
  return k == SensorKind::kLidar ? "lidar" : "radar";
}

/// One timestamped, sensor-tagged observation in the ego frame.
///
/// LiDAR measures position only; RADAR adds the range rate (negative when
/// closing). The ego pose at the physical measurement instant travels with the
/// measurement so that late-arriving observations are transformed with the
/// historically correct frame.
struct Measurement
{
  SensorKind sensor{SensorKind::kLidar};
  double t_meas{0.0};                           // [s] physical measurement instant
  Eigen::Vector2d position_local{0.0, 0.0};     // [m] ego frame, x forward
  std::optional<double> range_rate;             // [m/s] RADAR only
  Eigen::MatrixXd noise;                        // R: 2x2 LiDAR, 3x3 RADAR, ego frame
  EgoState ego_at_meas;

  int output_dim() const { return sensor == SensorKind::kRadar ? 3 : 2; }

  bool valid() const
  {
    if (!std::isfinite(t_meas) || t_meas <= 0.0) return false;
    if (!position_local.allFinite() || !ego_at_meas.finite()) return false;
    if ((sensor == SensorKind::kRadar) != range_rate.has_value()) return false;
    if (range_rate && !std::isfinite(*range_rate)) return false;
    const int d = output_dim();
    if (noise.rows() != d || noise.cols() != d || !noise.allFinite()) return false;
    if (!noise.isApprox(noise.transpose(), 1e-9)) return false;
    // positive definite via leading principal minors (d <= 3)
    if (noise(0, 0) <= 0.0) return false;
    if (noise.topLeftCorner(2, 2).determinant() <= 0.0) return false;
    if (d == 3 && noise.determinant() <= 0.0) return false;
    return true;
  }
};

/// Per-track EKF state: mean, covariance and validity timestamp.
struct FilterState
{
  TargetState state;
  Eigen::Matrix4d cov{Eigen::Matrix4d::Identity()};
  double t{0.0};  // [s]
};

}  // namespace mtt
