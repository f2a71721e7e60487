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
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mtt/measurement_model.hpp"
#include "mtt/motion.hpp"
#include "mtt/types.hpp"

namespace mtt {

/// Corrections whose innovation covariance exceeds this condition number are
/// rejected rather than inverted.
inline constexpr double kMaxInnovationCondition = 1e12;

inline Eigen::Matrix4d symmetrize(const Eigen::Matrix4d & p)
{
  return 0.5 * (p + p.transpose());
}

/// P' = A P A^T + Q_step, symmetrized.
inline Eigen::Matrix4d propagate_covariance(
  const Eigen::Matrix4d & a, const Eigen::Matrix4d & p, const Eigen::Matrix4d & q_step)
{
  return symmetrize(a * p * a.transpose() + q_step);
}

/// EKF prediction: propagates mean through the CVTR step and covariance
/// through its Jacobian, adding rate-scaled process noise.
inline FilterState ekf_predict(
  const FilterState & fs, double omega, double T, const ProcessNoise & q,
  double eps_omega = kDefaultOmegaEpsilon)
{
  FilterState out;
  out.state = cvtr_step(fs.state, omega, T, eps_omega);
  const Eigen::Matrix4d a = cvtr_jacobian(fs.state, omega, T, eps_omega);
  out.cov = propagate_covariance(a, fs.cov, q.step_cov(T));
  out.t = fs.t + T;
  return out;
}

struct CorrectionResult
{
  FilterState fs;
  bool rejected{false};        // innovation covariance too ill-conditioned
  double condition{0.0};
};

/// EKF correction with the sensor-appropriate output map. The measurement
/// position is globalized with its own ego snapshot; innovations contain no
/// angular channels, so plain differencing applies. Returns the input state
/// unchanged (flagged) when S is numerically singular.
inline CorrectionResult ekf_correct(const FilterState & fs, const Measurement & m)
{
  if (std::abs(fs.t - m.t_meas) > 1e-9) {
    throw std::invalid_argument("ekf_correct: filter time not aligned with measurement");
  }
  const EgoState & ego = m.ego_at_meas;
  const Eigen::Vector2d pos_global = to_global(m);
  const Eigen::MatrixXd r = measurement_noise_global(m);

  Eigen::MatrixXd h;
  Eigen::VectorXd innovation;
  if (m.sensor == SensorKind::kRadar) {
    h = radar_matrix(fs.state, ego);
    Eigen::Vector3d y(pos_global.x(), pos_global.y(), *m.range_rate);
    innovation = y - radar_output(fs.state, ego);
  } else {
    h = lidar_matrix();
    innovation = pos_global - lidar_output(fs.state);
  }

  const Eigen::MatrixXd s = h * fs.cov * h.transpose() + r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  CorrectionResult out{fs, false, 0.0};
  if (!(lmin > 0.0) || !std::isfinite(lmax) || lmax / lmin > kMaxInnovationCondition) {
    out.rejected = true;
    out.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    return out;
  }
  out.condition = lmax / lmin;

  const Eigen::MatrixXd gain = fs.cov * h.transpose() * s.inverse();
  Eigen::Vector4d x = fs.state.vec() + gain * innovation;
  out.fs.state = TargetState::from_vec(x);
  out.fs.cov = symmetrize((Eigen::Matrix4d::Identity() - gain * h) * fs.cov);
  return out;
}

/// Two-step initialization: speed and heading from the finite difference of
/// the first two associated positions. Timestamps closer than 1e-3 s fall back
/// to v = 0, theta = 0 at the second position with a fully inflated prior.
inline FilterState init_two_step(
  const Measurement & m1, const Measurement & m2, const Eigen::Matrix4d & p0,
  const Eigen::Matrix4d & p_fallback)
{
  const Eigen::Vector2d p1 = to_global(m1);
  const Eigen::Vector2d p2 = to_global(m2);
  if (!p1.allFinite() || !p2.allFinite()) {
    throw std::invalid_argument("init_two_step: non-finite position");
  }
  const double dt = m2.t_meas - m1.t_meas;
  FilterState fs;
  fs.t = m2.t_meas;
  if (dt < 1e-3) {
    fs.state = {p2.x(), p2.y(), 0.0, 0.0};
    fs.cov = p_fallback;
    return fs;
  }
  const Eigen::Vector2d d = p2 - p1;
  fs.state = {p2.x(), p2.y(), d.norm() / dt, std::atan2(d.y(), d.x())};
  fs.cov = p0;
  return fs;
}

}  // namespace mtt
