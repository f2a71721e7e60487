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

#include <stdexcept>
#include <string>

#include "mtt/association.hpp"
#include "mtt/motion.hpp"
#include "mtt/track.hpp"

#include <json.hpp>

namespace mtt {

/// Every tuning knob of the tracking engine. Defaults are the values used by
/// the built-in scenarios; all of them can be overridden from a JSON config.
struct EngineConfig
{
  Eigen::Vector4d q_rate_diag{0.02, 0.02, 6.0, 0.15};  // process noise spectral density
  double gate{kDefaultGate};                           // squared-Mahalanobis gate
  FsmConfig fsm{};
  double eps_omega{kDefaultOmegaEpsilon};  // [rad/s] straight-line branch switch
  double omega_max{2.0};                   // [rad/s] yaw-rate input clamp
  double rho_max{0.1};                     // [1/m] curvature cap
  double curvature_window_m{5.0};          // [m] curvature fit half window
  double psm_horizon_s{1.0};               // [s] past-buffer retention
  double rate_hz{33.0};                    // engine cycle rate (driven by the caller)
  bool compensate_output_delay{true};      // forward-predict outputs to t_curr
  double start_time_s{0.0};                // initial engine clock

  // initial covariance after two-step initialization
  double p0_pos_std{0.5};     // [m]
  double p0_vel_std{20.0};    // [m/s]
  double p0_theta_std{0.5};   // [rad]
  // inflation applied to the v/theta prior entries of freshly spawned tracks
  double spawn_inflation{2.0};

  // assumed sensor noise, used when stamping measurements read from files
  Eigen::Vector2d lidar_noise_std{0.15, 0.15};      // [m]
  Eigen::Vector3d radar_noise_std{0.5, 0.5, 0.3};   // [m, m, m/s]

  ProcessNoise process_noise() const { return ProcessNoise::from_diagonal(q_rate_diag); }

  Eigen::Matrix4d p0() const
  {
    Eigen::Vector4d d{p0_pos_std * p0_pos_std, p0_pos_std * p0_pos_std, p0_vel_std * p0_vel_std,
                      p0_theta_std * p0_theta_std};
    return d.asDiagonal();
  }

  Eigen::Matrix4d p_spawn() const
  {
    Eigen::Matrix4d p = p0();
    p(2, 2) *= spawn_inflation * spawn_inflation;
    p(3, 3) *= spawn_inflation * spawn_inflation;
    return p;
  }

  Eigen::Matrix4d p_fallback() const
  {
    Eigen::Matrix4d p = p0();
    p(2, 2) = 4.0 * p0_vel_std * p0_vel_std;
    p(3, 3) = kPi * kPi;
    return p;
  }

  /// Throws std::invalid_argument naming the violated rule.
  void validate() const
  {
    if (!fsm.valid()) {
      throw std::invalid_argument(
        "config: FSM thresholds must satisfy th_eliminate < th_accept < th_confirm <= window");
    }
    if (!(gate > 0.0)) throw std::invalid_argument("config: gate must be positive");
    if (!(q_rate_diag.minCoeff() >= 0.0)) {
      throw std::invalid_argument("config: q_rate entries must be non-negative");
    }
    if (!(eps_omega > 0.0)) throw std::invalid_argument("config: eps_omega must be positive");
    if (!(omega_max > 0.0)) throw std::invalid_argument("config: omega_max must be positive");
    if (!(rho_max > 0.0)) throw std::invalid_argument("config: rho_max must be positive");
    if (!(psm_horizon_s > 0.0)) throw std::invalid_argument("config: psm_horizon must be positive");
    if (!(rate_hz > 0.0)) throw std::invalid_argument("config: rate_hz must be positive");
    if (!(p0_pos_std > 0.0 && p0_vel_std > 0.0 && p0_theta_std > 0.0)) {
      throw std::invalid_argument("config: initial covariance stds must be positive");
    }
    if (!(lidar_noise_std.minCoeff() > 0.0) || !(radar_noise_std.minCoeff() > 0.0)) {
      throw std::invalid_argument("config: sensor noise stds must be positive");
    }
  }
};

inline void to_json(nlohmann::json & j, const EngineConfig & c)
{
  j = nlohmann::json{
    {"q_rate", {c.q_rate_diag(0), c.q_rate_diag(1), c.q_rate_diag(2), c.q_rate_diag(3)}},
    {"gate", c.gate},
    {"fsm",
     {{"window", c.fsm.window},
      {"accept", c.fsm.th_accept},
      {"confirm", c.fsm.th_confirm},
      {"eliminate", c.fsm.th_eliminate}}},
    {"eps_omega", c.eps_omega},
    {"omega_max", c.omega_max},
    {"rho_max", c.rho_max},
    {"curvature_window_m", c.curvature_window_m},
    {"psm_horizon_s", c.psm_horizon_s},
    {"rate_hz", c.rate_hz},
    {"compensate_output_delay", c.compensate_output_delay},
    {"start_time_s", c.start_time_s},
    {"p0_pos_std", c.p0_pos_std},
    {"p0_vel_std", c.p0_vel_std},
    {"p0_theta_std", c.p0_theta_std},
    {"spawn_inflation", c.spawn_inflation},
    {"lidar_noise_std", {c.lidar_noise_std(0), c.lidar_noise_std(1)}},
    {"radar_noise_std", {c.radar_noise_std(0), c.radar_noise_std(1), c.radar_noise_std(2)}}};
}

inline void from_json(const nlohmann::json & j, EngineConfig & c)
{
  if (j.contains("q_rate")) {
    const auto q = j.at("q_rate");
    for (int i = 0; i < 4; ++i) c.q_rate_diag(i) = q.at(i).get<double>();
  }
  if (j.contains("gate")) c.gate = j.at("gate").get<double>();
  if (j.contains("fsm")) {
    const auto f = j.at("fsm");
    if (f.contains("window")) c.fsm.window = f.at("window").get<int>();
    if (f.contains("accept")) c.fsm.th_accept = f.at("accept").get<int>();
    if (f.contains("confirm")) c.fsm.th_confirm = f.at("confirm").get<int>();
    if (f.contains("eliminate")) c.fsm.th_eliminate = f.at("eliminate").get<int>();
  }
  if (j.contains("eps_omega")) c.eps_omega = j.at("eps_omega").get<double>();
  if (j.contains("omega_max")) c.omega_max = j.at("omega_max").get<double>();
  if (j.contains("rho_max")) c.rho_max = j.at("rho_max").get<double>();
  if (j.contains("curvature_window_m")) {
    c.curvature_window_m = j.at("curvature_window_m").get<double>();
  }
  if (j.contains("psm_horizon_s")) c.psm_horizon_s = j.at("psm_horizon_s").get<double>();
  if (j.contains("rate_hz")) c.rate_hz = j.at("rate_hz").get<double>();
  if (j.contains("compensate_output_delay")) {
    c.compensate_output_delay = j.at("compensate_output_delay").get<bool>();
  }
  if (j.contains("start_time_s")) c.start_time_s = j.at("start_time_s").get<double>();
  if (j.contains("p0_pos_std")) c.p0_pos_std = j.at("p0_pos_std").get<double>();
  if (j.contains("p0_vel_std")) c.p0_vel_std = j.at("p0_vel_std").get<double>();
  if (j.contains("p0_theta_std")) c.p0_theta_std = j.at("p0_theta_std").get<double>();
  if (j.contains("spawn_inflation")) c.spawn_inflation = j.at("spawn_inflation").get<double>();
  if (j.contains("lidar_noise_std")) {
    const auto n = j.at("lidar_noise_std");
    for (int i = 0; i < 2; ++i) c.lidar_noise_std(i) = n.at(i).get<double>();
  }
  if (j.contains("radar_noise_std")) {
    const auto n = j.at("radar_noise_std");
    for (int i = 0; i < 3; ++i) c.radar_noise_std(i) = n.at(i).get<double>();
  }
}

}  // namespace mtt
