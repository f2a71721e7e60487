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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtt/association.hpp"
#include "mtt/config.hpp"
#include "mtt/ekf.hpp"
#include "mtt/measurement_model.hpp"
#include "mtt/reference_trajectory.hpp"
#include "mtt/track.hpp"

namespace mtt {

/// One Confirmed track as reported to consumers.
struct TrackOutput
{
  int id{0};
  TargetState state;
  Eigen::Matrix4d cov{Eigen::Matrix4d::Identity()};
};

/// Element of the past-states buffer: the full engine state right after one
/// update, paired with the event that produced it. Self-sufficient: restoring
/// it and replaying the subsequently stored events reproduces the engine
/// state exactly.
struct EngineSnapshot
{
  double t{0.0};
  std::vector<Track> tracks;
  int next_track_id{1};
  std::optional<Measurement> measurement;  // absent for measurement-less cycles
};

struct EngineStats
{
  std::uint64_t cycles{0};
  std::uint64_t measurements_processed{0};
  std::uint64_t oosm_count{0};
  std::uint64_t reprocess_count{0};
  std::uint64_t dropped_oosm{0};
  std::uint64_t rejected_ingests{0};
  std::uint64_t rejected_corrections{0};
  std::uint64_t spawned_tracks{0};
  std::uint64_t terminated_tracks{0};
};

/// Latency-aware multi-target tracking engine.
///
/// Caller-driven: `ingest` may be called from any thread; `cycle(t_curr)` and
/// `output_at` must be called from a single owner context. Each cycle drains
/// the measurement buffer in timestamp order, running EKF prediction with the
/// track-curvature yaw-rate input, gated GNN association, M/N track
/// management and EKF correction per measurement. Measurements older than the
/// engine clock trigger a rollback to the newest past snapshot preceding them
/// and an in-order replay (OOSM reprocessing).
class MttEngine
{
public:
  MttEngine(EngineConfig cfg, ReferenceTrajectory trajectory)
  : cfg_(std::move(cfg)), traj_(std::move(trajectory)), t_mtt_(cfg_.start_time_s)
  {
    cfg_.validate();
    // genesis snapshot so measurements older than the first cycle can replay
    past_.push_back({t_mtt_, {}, next_track_id_, std::nullopt});
  }

  void set_logger(std::function<void(const std::string &)> logger)
  {
    logger_ = std::move(logger);
  }

  /// Buffers a measurement for the next cycle. Thread safe; non-finite
  /// timestamps are rejected.
  void ingest(const Measurement & m)
  {
    if (!std::isfinite(m.t_meas)) {
      rejected_ingests_.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    std::lock_guard lock(intake_mutex_);
    intake_.push_back(m);
  }

  /// Runs one full update cycle at the current caller time and returns the
  /// Confirmed tracks predicted to t_curr.
  std::vector<TrackOutput> cycle(double t_curr)
  {
    if (!std::isfinite(t_curr) || t_curr < last_t_curr_) {
      throw std::invalid_argument("cycle: t_curr must be finite and non-decreasing");
    }
    last_t_curr_ = t_curr;
    drain_intake();

    bool processed_any = false;
    double clock_floor = t_mtt_;
    while (!queue_.empty()) {
      auto it = queue_.begin();
      const double t = it->first;
      std::optional<Measurement> event = std::move(it->second);
      queue_.erase(it);
      if (event && t < t_mtt_) {
        ++stats_.oosm_count;
        clock_floor = std::max(clock_floor, t_mtt_);
        if (!rollback_before(t)) {
          ++stats_.dropped_oosm;
          log("dropped OOSM at t=" + std::to_string(t) + ": older than the PSM horizon");
          continue;
        }
        // re-enqueue after the replayed events with the same timestamp
        queue_.emplace(t, std::move(event));
        continue;
      }
      if (event) {
        process_measurement(*event);
        processed_any = true;
      } else {
        advance_clock(t);
      }
    }

    if (!processed_any && t_curr > t_mtt_) {
      // measurement-less cycle: prediction only, by the elapsed step
      advance_clock(t_curr);
    }
    if (t_mtt_ < clock_floor) {
      // reprocessing must never leave the clock behind its pre-OOSM value
      advance_clock(clock_floor);
    }
    ++stats_.cycles;
    return output_at(t_curr);
  }

  /// Confirmed tracks, each copied and predicted forward by
  /// t_curr - t_MTT without mutating the stored filters.
  std::vector<TrackOutput> output_at(double t_curr) const
  {
    std::vector<TrackOutput> out;
    const double t_out = cfg_.compensate_output_delay ? t_curr - t_mtt_ : 0.0;
    for (const Track & track : tracks_) {
      if (track.status != TrackStatus::kConfirmed) continue;
      FilterState fs = track.filter;
      if (t_out > 0.0) {
        const double omega = traj_.yaw_rate_input(fs.state, cfg_.omega_max);
        fs = ekf_predict(fs, omega, t_out, cfg_.process_noise(), cfg_.eps_omega);
      }
      out.push_back({track.id, fs.state, fs.cov});
    }
    return out;
  }

  double t_mtt() const { return t_mtt_; }

  EngineStats stats() const
  {
    EngineStats s = stats_;
    s.rejected_ingests = rejected_ingests_.load(std::memory_order_relaxed);
    return s;
  }
  const std::deque<EngineSnapshot> & past_buffer() const { return past_; }
  const std::vector<Track> & tracks() const { return tracks_; }

  /// Timestamps currently buffered, in processing order (test access).
  std::vector<double> buffered_timestamps() const
  {
    std::vector<double> out;
    for (const auto & [t, ev] : queue_) {
      if (ev) out.push_back(t);
    }
    return out;
  }

  std::size_t buffered_count() const { return queue_.size(); }

private:
  void log(const std::string & msg) const
  {
    if (logger_) logger_(msg);
  }

  void drain_intake()
  {
    std::vector<Measurement> batch;
    {
      std::lock_guard lock(intake_mutex_);
      batch.swap(intake_);
    }
    for (auto & m : batch) queue_.emplace(m.t_meas, std::move(m));
  }

  void predict_all(double T)
  {
    const ProcessNoise q = cfg_.process_noise();
    for (Track & track : tracks_) {
      const double omega = traj_.yaw_rate_input(track.filter.state, cfg_.omega_max);
      track.filter = ekf_predict(track.filter, omega, T, q, cfg_.eps_omega);
    }
  }

  void push_snapshot(std::optional<Measurement> m)
  {
    past_.push_back({t_mtt_, tracks_, next_track_id_, std::move(m)});
    const double horizon_floor = t_mtt_ - cfg_.psm_horizon_s;
    while (!past_.empty() && past_.front().t < horizon_floor) past_.pop_front();
  }

  void remove_terminated()
  {
    for (const Track & t : tracks_) {
      if (t.status == TrackStatus::kTerminated) ++stats_.terminated_tracks;
    }
    std::erase_if(tracks_, [](const Track & t) { return t.status == TrackStatus::kTerminated; });
  }

  // Measurement-less update: prediction by the elapsed step, a miss recorded
  // in every track's window, and a snapshot so idle gaps stay replayable.
  void advance_clock(double t)
  {
    const double T = t - t_mtt_;
    if (T <= 0.0) return;
    predict_all(T);
    for (Track & track : tracks_) {
      record_cycle(track, false, cfg_.fsm);
      apply_fsm_transition(track, cfg_.fsm);
    }
    remove_terminated();
    t_mtt_ = t;
    push_snapshot(std::nullopt);
  }

  // One full MTT update for a single in-sequence measurement.
  void process_measurement(const Measurement & m)
  {
    const double T = m.t_meas - t_mtt_;
    if (T > 0.0) predict_all(T);

    // association: gated squared-Mahalanobis cost against every live track
    const Eigen::Vector2d meas_global = to_global(m);
    const Eigen::Matrix2d r_pos =
      measurement_noise_global(m).topLeftCorner<2, 2>();
    std::vector<TrackGateInput> gate_inputs;
    gate_inputs.reserve(tracks_.size());
    for (const Track & track : tracks_) {
      gate_inputs.push_back(
        {track.filter.state.position(),
         track.filter.cov.topLeftCorner<2, 2>() + r_pos});
    }
    const GatedCostMatrix costs = build_cost_matrix(gate_inputs, {meas_global}, cfg_.gate);
    const AssignmentResult assignment = solve_assignment(costs);
    const int assigned_row = assignment.pairs.empty() ? -1 : assignment.pairs.front().first;

    // track state management before correction
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      record_cycle(tracks_[i], static_cast<int>(i) == assigned_row, cfg_.fsm);
      apply_fsm_transition(tracks_[i], cfg_.fsm);
    }

    if (assigned_row >= 0) {
      Track & track = tracks_[static_cast<std::size_t>(assigned_row)];
      if (track.status != TrackStatus::kTerminated) {
        if (track.association_count == 1) {
          // second associated measurement: two-step initialization, no EKF correction
          track.filter =
            init_two_step(track.first_measurement, m, cfg_.p0(), cfg_.p_fallback());
        } else {
          const CorrectionResult res = ekf_correct(track.filter, m);
          if (res.rejected) {
            ++stats_.rejected_corrections;
            log("correction rejected for track " + std::to_string(track.id) +
                ": innovation covariance condition " + std::to_string(res.condition));
          } else {
            track.filter = res.fs;
          }
        }
        ++track.association_count;
      }
    } else {
      tracks_.push_back(spawn_track(next_track_id_++, m, meas_global, cfg_.p_spawn()));
      ++stats_.spawned_tracks;
    }

    remove_terminated();
    t_mtt_ = m.t_meas;
    ++stats_.measurements_processed;
    push_snapshot(m);
  }

  // Rolls the engine back to the newest snapshot strictly older than t_oosm
  // and moves every later stored event back into the queue for replay.
  // Returns false when no such snapshot exists (OOSM beyond the horizon).
  bool rollback_before(double t_oosm)
  {
    std::size_t idx = past_.size();
    while (idx > 0 && past_[idx - 1].t >= t_oosm) --idx;
    if (idx == 0) return false;
    const EngineSnapshot & restore = past_[idx - 1];
    for (std::size_t k = idx; k < past_.size(); ++k) {
      queue_.emplace(past_[k].t, past_[k].measurement);
    }
    tracks_ = restore.tracks;
    next_track_id_ = restore.next_track_id;
    t_mtt_ = restore.t;
    past_.erase(past_.begin() + static_cast<std::ptrdiff_t>(idx), past_.end());
    ++stats_.reprocess_count;
    return true;
  }

  EngineConfig cfg_;
  ReferenceTrajectory traj_;

  std::mutex intake_mutex_;
  std::vector<Measurement> intake_;

  // B_M plus replayed clock waypoints, keyed by timestamp; equal keys keep
  // insertion order. Waypoints (empty payloads) re-create measurement-less
  // cycles during reprocessing so the association history replays exactly.
  std::multimap<double, std::optional<Measurement>> queue_;

  std::deque<EngineSnapshot> past_;  // B_PSM
  std::vector<Track> tracks_;
  double t_mtt_{0.0};
  double last_t_curr_{-std::numeric_limits<double>::infinity()};
  int next_track_id_{1};
  EngineStats stats_;
  std::atomic<std::uint64_t> rejected_ingests_{0};
  std::function<void(const std::string &)> logger_;
};

}  // namespace mtt
