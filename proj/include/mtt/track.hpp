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

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "mtt/types.hpp"

namespace mtt {

/// Track lifecycle states. Only Confirmed tracks are engine output;
/// Terminated is terminal and the track is deleted at cycle end.
enum class TrackStatus : std::uint8_t { kTentative, kAccepted, kConfirmed, kTerminated };

inline const char * to_string(TrackStatus s)
{
  switch (s) {
    case TrackStatus::kTentative: return "tentative";
    case TrackStatus::kAccepted: return "accepted";
    case TrackStatus::kConfirmed: return "confirmed";
    default: return "terminated";
  }
}

/// M/N lifecycle thresholds: hit counts over the last `window` MTT cycles.
struct FsmConfig
{
  int window{10};        // M
  int th_accept{3};      // Tentative -> Accepted
  int th_confirm{6};     // Accepted -> Confirmed
  int th_eliminate{2};   // Accepted/Confirmed -> Terminated when hits fall below

  bool valid() const
  {
    return window >= 1 && th_eliminate < th_accept && th_accept < th_confirm &&
           th_confirm <= window;
  }
};

/// One tracked vehicle: EKF state, lifecycle status and the association
/// history window driving the M/N logic.
struct Track
{
  int id{0};
  FilterState filter;
  TrackStatus status{TrackStatus::kTentative};
  std::deque<bool> history;        // last <= M cycles, true = associated
  int age_cycles{0};
  int association_count{0};        // total associated measurements, spawn included

  // spawn observation, consumed by the two-step initialization
  Measurement first_measurement;

  int hits() const { return static_cast<int>(std::count(history.begin(), history.end(), true)); }
};

/// Pushes this cycle's association flag into the history window (evicting
/// beyond M) and ages the track. Must not be called on Terminated tracks.
inline void record_cycle(Track & track, bool associated, const FsmConfig & cfg)
{
  if (track.status == TrackStatus::kTerminated) {
    throw std::logic_error("record_cycle: track is terminated");
  }
  track.history.push_back(associated);
  while (static_cast<int>(track.history.size()) > cfg.window) track.history.pop_front();
  ++track.age_cycles;
}

/// Applies at most one FSM transition based on the current window. Promotions
/// take precedence; a Tentative track that reaches M cycles without acceptance
/// is terminated, and Accepted/Confirmed tracks starve out once the full
/// window holds fewer than th_eliminate hits.
inline void apply_fsm_transition(Track & track, const FsmConfig & cfg)
{
  const int h = track.hits();
  const bool window_full = static_cast<int>(track.history.size()) >= cfg.window;
  switch (track.status) {
    case TrackStatus::kTentative:
      if (h >= cfg.th_accept) {
        track.status = TrackStatus::kAccepted;
      } else if (track.age_cycles >= cfg.window) {
        track.status = TrackStatus::kTerminated;
      }
      break;
    case TrackStatus::kAccepted:
      if (h >= cfg.th_confirm) {
        track.status = TrackStatus::kConfirmed;
      } else if (window_full && h < cfg.th_eliminate) {
        track.status = TrackStatus::kTerminated;
      }
      break;
    case TrackStatus::kConfirmed:
      if (window_full && h < cfg.th_eliminate) {
        track.status = TrackStatus::kTerminated;
      }
      break;
    case TrackStatus::kTerminated:
      break;
  }
}

/// Spawns a Tentative track from an unassociated measurement: position from
/// the globalized measurement, v = 0, theta = 0, inflated prior. The spawn
/// counts as the track's first association.
inline Track spawn_track(
  int id, const Measurement & m, const Eigen::Vector2d & position_global,
  const Eigen::Matrix4d & p_spawn)
{
  Track t;
  t.id = id;
  t.filter.state = {position_global.x(), position_global.y(), 0.0, 0.0};
  t.filter.cov = p_spawn;
  t.filter.t = m.t_meas;
  t.status = TrackStatus::kTentative;
  t.history.push_back(true);
  t.age_cycles = 1;
  t.association_count = 1;
  t.first_measurement = m;
  return t;
}

}  // namespace mtt
