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
#include <limits>
#include <utility>
#include <vector>

#include "mtt/types.hpp"

namespace mtt {

/// Default gate on the squared Mahalanobis distance: chi-square, 2 dof,
/// p = 0.999.
inline constexpr double kDefaultGate = 13.8;

/// Cost sentinel for gated-out pairs. Feasible costs must stay well below it.
inline constexpr double kForbiddenCost = 1073741824.0;  // 2^30

/// Squared Mahalanobis distance of a position innovation under the position
/// block of the innovation covariance. A singular covariance makes the pair
/// ungateable (+inf).
inline double mahalanobis_sq(
  const Eigen::Vector2d & predicted, const Eigen::Matrix2d & s_pos,
  const Eigen::Vector2d & measured)
{
  const double det = s_pos(0, 0) * s_pos(1, 1) - s_pos(0, 1) * s_pos(1, 0);
  if (!(det > 0.0) || !std::isfinite(det) || s_pos(0, 0) <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const Eigen::Vector2d e = predicted - measured;
  const double d =
    (e.x() * (s_pos(1, 1) * e.x() - s_pos(0, 1) * e.y()) +
     e.y() * (s_pos(0, 0) * e.y() - s_pos(1, 0) * e.x())) /
    det;
  return d;
}

/// Track-by-measurement cost matrix of squared Mahalanobis distances with the
/// gate applied; entries above the gate (or non-finite) are forbidden.
struct GatedCostMatrix
{
  Eigen::MatrixXd cost;                         // rows: tracks, cols: measurements
  std::vector<std::vector<bool>> allowed;
  double gate{kDefaultGate};

  int rows() const { return static_cast<int>(cost.rows()); }
  int cols() const { return static_cast<int>(cost.cols()); }
};

struct TrackGateInput
{
  Eigen::Vector2d predicted;  // predicted output position, global frame
  Eigen::Matrix2d s_pos;      // position block of the innovation covariance
};

inline GatedCostMatrix build_cost_matrix(
  const std::vector<TrackGateInput> & tracks, const std::vector<Eigen::Vector2d> & measurements,
  double gate = kDefaultGate)
{
  GatedCostMatrix m;
  m.gate = gate;
  const int nr = static_cast<int>(tracks.size());
  const int nc = static_cast<int>(measurements.size());
  m.cost.resize(nr, nc);
  m.allowed.assign(nr, std::vector<bool>(nc, false));
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < nc; ++j) {
      const double d = mahalanobis_sq(tracks[i].predicted, tracks[i].s_pos, measurements[j]);
      m.cost(i, j) = d;
      m.allowed[i][j] = std::isfinite(d) && d <= gate;
    }
  }
  return m;
}

struct AssignmentResult
{
  std::vector<std::pair<int, int>> pairs;  // (track row, measurement column)
  std::vector<int> unassigned_tracks;
  std::vector<int> unassigned_measurements;
};

namespace detail {

// Jonker-style shortest augmenting path solver for a square cost matrix
// (potentials formulation of the Munkres algorithm). Returns row -> column.
inline std::vector<int> hungarian_square(const Eigen::MatrixXd & cost)
{
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

// Objective of a gated assignment problem, ordered lexicographically:
// fewer unassigned feasible slots first, then lower feasible cost.
struct AssignmentScore
{
  int deficit{0};   // padded size minus number of feasible pairs
  double cost{0.0};

  bool close_to(const AssignmentScore & o, double tol) const
  {
    return deficit == o.deficit && std::abs(cost - o.cost) <= tol * std::max(1.0, std::abs(o.cost));
  }
};

// Solves the gated rectangular problem (rows/cols given by index lists into
// the full matrix) after padding to a square with the forbidden sentinel.
inline AssignmentScore solve_subproblem(
  const GatedCostMatrix & m, const std::vector<int> & rows, const std::vector<int> & cols,
  std::vector<std::pair<int, int>> * pairs_out)
{
  const int nr = static_cast<int>(rows.size());
  const int nc = static_cast<int>(cols.size());
  const int n = std::max(nr, nc);
  AssignmentScore score{n, 0.0};
  if (pairs_out) pairs_out->clear();
  if (n == 0) {
    score.deficit = 0;
    return score;
  }
  Eigen::MatrixXd padded = Eigen::MatrixXd::Constant(n, n, kForbiddenCost);
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < nc; ++j) {
      if (m.allowed[rows[i]][cols[j]]) padded(i, j) = m.cost(rows[i], cols[j]);
    }
  }
  const std::vector<int> row_to_col = hungarian_square(padded);
  std::vector<std::pair<int, int>> feasible;
  for (int i = 0; i < nr; ++i) {
    const int j = row_to_col[i];
    if (j >= 0 && j < nc && m.allowed[rows[i]][cols[j]]) {
      feasible.emplace_back(rows[i], cols[j]);
    }
  }
  std::sort(feasible.begin(), feasible.end());
  score.deficit = n - static_cast<int>(feasible.size());
  for (const auto & [r, c] : feasible) score.cost += m.cost(r, c);
  if (pairs_out) *pairs_out = std::move(feasible);
  return score;
}

}  // namespace detail

/// Minimum-total-cost assignment over the gated pairs, maximizing the number
/// of assignments first. Ties between equal-cost optima are broken
/// deterministically: lowest track row first, then lowest measurement column.
/// No returned pair ever violates the gate.
inline AssignmentResult solve_assignment(const GatedCostMatrix & m)
{
  constexpr double kTol = 1e-9;
  AssignmentResult out;
  std::vector<int> rows(m.rows()), cols(m.cols());
  for (int i = 0; i < m.rows(); ++i) rows[i] = i;
  for (int j = 0; j < m.cols(); ++j) cols[j] = j;

  detail::AssignmentScore best = detail::solve_subproblem(m, rows, cols, nullptr);

  // Fix rows one at a time onto the smallest column that preserves the
  // optimum; a row with no such column stays unassigned.
  std::vector<int> remaining_cols = cols;
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<int> rest_rows;
    for (int r = i + 1; r < m.rows(); ++r) rest_rows.push_back(r);
    bool fixed = false;
    for (std::size_t cj = 0; cj < remaining_cols.size(); ++cj) {
      const int j = remaining_cols[cj];
      if (!m.allowed[i][j]) continue;
      std::vector<int> rest_cols = remaining_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(cj));
      const detail::AssignmentScore sub = detail::solve_subproblem(m, rest_rows, rest_cols, nullptr);
      detail::AssignmentScore with_fix{sub.deficit, sub.cost + m.cost(i, j)};
      if (with_fix.close_to(best, kTol)) {
        out.pairs.emplace_back(i, j);
        remaining_cols = std::move(rest_cols);
        best = sub;
        fixed = true;
        break;
      }
    }
    if (!fixed) {
      out.unassigned_tracks.push_back(i);
      // unassigned row contributes one deficit slot
      best = detail::solve_subproblem(m, rest_rows, remaining_cols, nullptr);
    }
  }
  std::vector<bool> col_used(m.cols(), false);
  for (const auto & [r, c] : out.pairs) col_used[c] = true;
  for (int j = 0; j < m.cols(); ++j) {
    if (!col_used[j]) out.unassigned_measurements.push_back(j);
  }
  return out;
}

}  // namespace mtt
