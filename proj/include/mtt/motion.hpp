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
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "mtt/types.hpp"

namespace mtt {

/// Below this yaw rate [rad/s] the circular-arc update degrades to the
/// straight-line limit; the 2v/w chord term loses precision to cancellation.
inline constexpr double kDefaultOmegaEpsilon = 1e-6;

/// Process noise as a constant-rate spectral density; the covariance added by
/// one prediction of duration T is rate * T.
struct ProcessNoise
{
  Eigen::Matrix4d rate{Eigen::Matrix4d::Zero()};

  static ProcessNoise from_diagonal(const Eigen::Vector4d & d)
  {
    ProcessNoise q;
    q.rate = d.asDiagonal();
    return q;
  }

  Eigen::Matrix4d step_cov(double T) const { return rate * T; }

  bool valid() const
  {
    if (!rate.allFinite()) return false;
    if ((rate - rate.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(rate);
    return es.eigenvalues().minCoeff() >= -1e-12;
  }
};

namespace detail {

inline void check_step_args(const TargetState & s, double omega, double T)
{
  if (!s.finite() || !std::isfinite(omega) || !std::isfinite(T)) {
    throw std::invalid_argument("cvtr: non-finite input");
  }
  if (T <= 0.0) {
    throw std::invalid_argument("cvtr: time step must be positive");
  }
}

}  // namespace detail

/// Exact variable-step discretization of the CVTR model: circular-arc
/// propagation at constant speed and yaw rate, straight-line limit for
/// |omega| <= eps_omega. Holds for any T > 0.
inline TargetState cvtr_step(
  const TargetState & s, double omega, double T, double eps_omega = kDefaultOmegaEpsilon)
{
  detail::check_step_args(s, omega, T);
  TargetState out = s;
  if (std::abs(omega) > eps_omega) {
    const double half = 0.5 * omega * T;
    const double chord = (2.0 * s.v / omega) * std::sin(half);
    out.x = s.x + chord * std::cos(s.theta + half);
    out.y = s.y + chord * std::sin(s.theta + half);
  } else {
    out.x = s.x + s.v * T * std::cos(s.theta);
    out.y = s.y + s.v * T * std::sin(s.theta);
  }
  out.theta = wrap_angle(s.theta + omega * T);
  return out;
}

/// State Jacobian dF/dX of cvtr_step, closed form, with the same branch
/// selection as the step itself. The yaw rate is an exogenous input and is
/// held fixed.
inline Eigen::Matrix4d cvtr_jacobian(
  const TargetState & s, double omega, double T, double eps_omega = kDefaultOmegaEpsilon)
{
  detail::check_step_args(s, omega, T);
  Eigen::Matrix4d A = Eigen::Matrix4d::Identity();
  if (std::abs(omega) > eps_omega) {
    const double half = 0.5 * omega * T;
    const double chord_per_v = (2.0 / omega) * std::sin(half);
    const double c = std::cos(s.theta + half);
    const double sn = std::sin(s.theta + half);
    A(0, 2) = chord_per_v * c;
    A(0, 3) = -s.v * chord_per_v * sn;
    A(1, 2) = chord_per_v * sn;
    A(1, 3) = s.v * chord_per_v * c;
  } else {
    A(0, 2) = T * std::cos(s.theta);
    A(0, 3) = -s.v * T * std::sin(s.theta);
    A(1, 2) = T * std::sin(s.theta);
    A(1, 3) = s.v * T * std::cos(s.theta);
  }
  return A;
}

}  // namespace mtt
