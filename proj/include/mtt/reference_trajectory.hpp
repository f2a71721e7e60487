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
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtt/types.hpp"

namespace mtt {

struct TrajectoryOptions
{
  double curvature_window_m{5.0};  // half-width of the arc-length fit window
  double rho_max{0.1};             // [1/m] curvature magnitude cap
  double grid_cell_m{10.0};        // spatial index cell size
};

/// The a-priori racetrack reference path: sampled points with per-point signed
/// curvature (positive for counter-clockwise turning) and cumulative arc
/// length. Immutable once built; safe to share across threads.
class ReferenceTrajectory
{
public:
  struct ClosestPoint
  {
    std::size_t index{0};
    double curvature{0.0};  // [1/m]
    double distance{0.0};   // [m]
  };

  ReferenceTrajectory() = default;

  /// Builds from a polyline centerline. Curvature at each point comes from the
  /// circumscribed circle through the samples one window to either side
  /// (wrapping when closed); endpoints of open trajectories copy their nearest
  /// interior value. A closed centerline whose endpoints do not already
  /// coincide is closed by duplicating the first point.
  static ReferenceTrajectory from_centerline(
    std::vector<Eigen::Vector2d> centerline, bool closed, TrajectoryOptions opts = {})
  {
    validate_centerline(centerline);
    if (closed && (centerline.front() - centerline.back()).norm() > 1e-6) {
      centerline.push_back(centerline.front());
    }
    ReferenceTrajectory traj;
    traj.closed_ = closed;
    traj.opts_ = opts;
    traj.points_ = std::move(centerline);
    traj.build_arc_length();
    traj.compute_curvature();
    traj.build_grid();
    return traj;
  }

  /// Same but with precomputed per-point curvature (clamped to rho_max).
  static ReferenceTrajectory from_centerline_with_curvature(
    std::vector<Eigen::Vector2d> centerline, std::vector<double> curvature, bool closed,
    TrajectoryOptions opts = {})
  {
    validate_centerline(centerline);
    if (curvature.size() != centerline.size()) {
      throw std::invalid_argument("trajectory: curvature size mismatch");
    }
    if (closed && (centerline.front() - centerline.back()).norm() > 1e-6) {
      centerline.push_back(centerline.front());
      curvature.push_back(curvature.front());
    }
    ReferenceTrajectory traj;
    traj.closed_ = closed;
    traj.opts_ = opts;
    traj.points_ = std::move(centerline);
    traj.curvature_ = std::move(curvature);
    for (double & r : traj.curvature_) {
      if (!std::isfinite(r)) throw std::invalid_argument("trajectory: non-finite curvature");
      r = std::clamp(r, -opts.rho_max, opts.rho_max);
    }
    traj.build_arc_length();
    traj.build_grid();
    return traj;
  }

  /// Sample minimizing Euclidean distance to the query; exact ties go to the
  /// lowest index, matching an exhaustive scan.
  ClosestPoint closest(const Eigen::Vector2d & query) const
  {
    const auto [idx, d2] = grid_search(query);
    return {idx, curvature_[idx], std::sqrt(d2)};
  }

  /// Yaw rate exogenous input: track speed times the curvature at the closest
  /// reference sample, clamped to |omega| <= omega_max.
  double yaw_rate_input(const TargetState & state, double omega_max = 2.0) const
  {
    const ClosestPoint cp = closest(state.position());
    return std::clamp(state.v * cp.curvature, -omega_max, omega_max);
  }

  /// Point and tangent heading at arc length s (wraps when closed, clamps when
  /// open). Used by the simulator to place vehicles.
  std::pair<Eigen::Vector2d, double> sample_at_arc_length(double s) const
  {
    const double L = total_length();
    if (closed_) {
      s = std::fmod(s, L);
      if (s < 0.0) s += L;
    } else {
      s = std::clamp(s, 0.0, L);
    }
    const auto it = std::upper_bound(arc_length_.begin(), arc_length_.end(), s);
    std::size_t hi = std::min<std::size_t>(
      static_cast<std::size_t>(it - arc_length_.begin()), points_.size() - 1);
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double seg = arc_length_[hi] - arc_length_[lo];
    const double u = seg > 0.0 ? (s - arc_length_[lo]) / seg : 0.0;
    const Eigen::Vector2d d = points_[hi] - points_[lo];
    return {points_[lo] + u * d, std::atan2(d.y(), d.x())};
  }

  const std::vector<Eigen::Vector2d> & points() const { return points_; }
  const std::vector<double> & curvature() const { return curvature_; }
  const std::vector<double> & arc_length() const { return arc_length_; }
  bool is_closed() const { return closed_; }
  std::size_t size() const { return points_.size(); }
  double total_length() const { return arc_length_.back(); }

private:
  static void validate_centerline(const std::vector<Eigen::Vector2d> & pts)
  {
    if (pts.size() < 3) throw std::invalid_argument("trajectory: need at least 3 points");
    for (const auto & p : pts) {
      if (!p.allFinite()) throw std::invalid_argument("trajectory: non-finite coordinate");
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if ((pts[i] - pts[i - 1]).norm() < 1e-3) {
        throw std::invalid_argument("trajectory: consecutive points closer than 1e-3 m");
      }
    }
  }

  void build_arc_length()
  {
    arc_length_.resize(points_.size());
    arc_length_[0] = 0.0;
    for (std::size_t i = 1; i < points_.size(); ++i) {
      arc_length_[i] = arc_length_[i - 1] + (points_[i] - points_[i - 1]).norm();
    }
  }

  // Signed circumscribed-circle curvature of three points; positive CCW.
  static double menger_curvature(
    const Eigen::Vector2d & a, const Eigen::Vector2d & b, const Eigen::Vector2d & c)
  {
    const Eigen::Vector2d ab = b - a;
    const Eigen::Vector2d bc = c - b;
    const Eigen::Vector2d ac = c - a;
    const double lab = ab.norm();
    const double lbc = bc.norm();
    const double lac = ac.norm();
    if (lab < 1e-9 || lbc < 1e-9 || lac < 1e-9) return 0.0;
    const double cross = ab.x() * bc.y() - ab.y() * bc.x();
    return 2.0 * cross / (lab * lbc * lac);
  }

  // Index at arc-length offset from i: wraps on closed loops (skipping the
  // duplicated endpoint), clamps on open ones.
  std::size_t at_arc_offset(std::size_t i, double offset) const
  {
    const std::size_t n = points_.size();
    const std::size_t n_eff = closed_ ? n - 1 : n;  // last point duplicates first when closed
    const double L = total_length();
    double target = arc_length_[i] + offset;
    if (closed_) {
      target = std::fmod(target, L);
      if (target < 0.0) target += L;
      // binary search over [0, n): arc_length_ is strictly increasing
      auto it = std::upper_bound(arc_length_.begin(), arc_length_.end(), target);
      std::size_t idx = it == arc_length_.begin()
                          ? 0
                          : static_cast<std::size_t>(it - arc_length_.begin()) - 1;
      return idx % n_eff;
    }
    if (target <= 0.0) return 0;
    if (target >= L) return n - 1;
    auto it = std::upper_bound(arc_length_.begin(), arc_length_.end(), target);
    return static_cast<std::size_t>(it - arc_length_.begin()) - 1;
  }

  void compute_curvature()
  {
    const std::size_t n = points_.size();
    curvature_.assign(n, 0.0);
    const double w = opts_.curvature_window_m;
    const std::size_t first = closed_ ? 0 : 1;
    const std::size_t last = closed_ ? n - 1 : n - 1;  // exclusive
    for (std::size_t i = first; i < last; ++i) {
      const std::size_t ib = at_arc_offset(i, -w);
      const std::size_t ia = at_arc_offset(i, +w);
      if (ib == i || ia == i || ib == ia) {
        curvature_[i] = 0.0;
        continue;
      }
      const double rho = menger_curvature(points_[ib], points_[i], points_[ia]);
      curvature_[i] = std::clamp(rho, -opts_.rho_max, opts_.rho_max);
    }
    if (closed_) {
      curvature_[n - 1] = curvature_[0];
    } else {
      curvature_[0] = curvature_[1];
      curvature_[n - 1] = curvature_[n - 2];
    }
  }

  static std::int64_t cell_key(std::int32_t cx, std::int32_t cy)
  {
    return (static_cast<std::int64_t>(cx) << 32) ^ (static_cast<std::int64_t>(cy) & 0xffffffffLL);
  }

  std::int32_t cell_coord(double v) const
  {
    return static_cast<std::int32_t>(std::floor(v / opts_.grid_cell_m));
  }

  void build_grid()
  {
    grid_.clear();
    for (std::size_t i = 0; i < points_.size(); ++i) {
      grid_[cell_key(cell_coord(points_[i].x()), cell_coord(points_[i].y()))].push_back(
        static_cast<std::uint32_t>(i));
    }
    cx_min_ = cy_min_ = std::numeric_limits<std::int32_t>::max();
    cx_max_ = cy_max_ = std::numeric_limits<std::int32_t>::min();
    for (const auto & p : points_) {
      cx_min_ = std::min(cx_min_, cell_coord(p.x()));
      cx_max_ = std::max(cx_max_, cell_coord(p.x()));
      cy_min_ = std::min(cy_min_, cell_coord(p.y()));
      cy_max_ = std::max(cy_max_, cell_coord(p.y()));
    }
  }

  // Expanding ring search over grid cells. Candidate comparison is the exact
  // (distance^2, index) lexicographic minimum, so results match a linear scan
  // including tie-breaks.
  std::pair<std::size_t, double> grid_search(const Eigen::Vector2d & q) const
  {
    const std::int32_t qx = cell_coord(q.x());
    const std::int32_t qy = cell_coord(q.y());
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    bool found = false;

    const std::int32_t max_ring = std::max(
      {std::abs(qx - cx_min_), std::abs(qx - cx_max_), std::abs(qy - cy_min_),
       std::abs(qy - cy_max_)});

    auto scan_cell = [&](std::int32_t cx, std::int32_t cy) {
      const auto it = grid_.find(cell_key(cx, cy));
      if (it == grid_.end()) return;
      for (const std::uint32_t i : it->second) {
        const double d2 = (points_[i] - q).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && i < best_idx)) {
          best_d2 = d2;
          best_idx = i;
          found = true;
        }
      }
    };

    for (std::int32_t r = 0; r <= max_ring; ++r) {
      // any point in an unscanned ring r is at least (r-1)*cell away
      if (found && (static_cast<double>(r) - 1.0) * opts_.grid_cell_m > std::sqrt(best_d2)) {
        break;
      }
      if (r == 0) {
        scan_cell(qx, qy);
        continue;
      }
      for (std::int32_t dx = -r; dx <= r; ++dx) {
        scan_cell(qx + dx, qy - r);
        scan_cell(qx + dx, qy + r);
      }
      for (std::int32_t dy = -r + 1; dy <= r - 1; ++dy) {
        scan_cell(qx - r, qy + dy);
        scan_cell(qx + r, qy + dy);
      }
    }
    return {best_idx, best_d2};
  }

  std::vector<Eigen::Vector2d> points_;
  std::vector<double> curvature_;
  std::vector<double> arc_length_;
  bool closed_{false};
  TrajectoryOptions opts_{};
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> grid_;
  std::int32_t cx_min_{0}, cx_max_{0}, cy_min_{0}, cy_max_{0};
};

}  // namespace mtt
