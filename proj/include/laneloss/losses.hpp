// Copyright 2026 The laneloss Authors
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

#ifndef LANELOSS__LOSSES_HPP_
#define LANELOSS__LOSSES_HPP_

#include "laneloss/autodiff.hpp"
#include "laneloss/geom.hpp"

#include <cstddef>
#include <vector>

/**
 * Training objectives for multimodal trajectory prediction.
 *
 * Trajectory tensors are M x T x 2 (modality, time step, xy). Winner
 * selections (the ground-truth winner and the per-lane winners) are hard
 * assignments computed from values; gradients flow only through the selected
 * modalities.
 */
namespace laneloss::losses
{

/// Smooth L1 transition point [m].
inline constexpr double kSmoothL1Beta = 1.0;

/// M candidate trajectories (M x T x 2) and their raw scores (M).
struct PredictionSet
{
  ad::Var trajectories;
  ad::Var scores;
};

struct LossWeights
{
  double alpha_score = 1.0;
  double alpha_pred = 1.0;
  double alpha_prop = 0.1;
  double epsilon_margin = 0.2;
};

/// Reference lane sampled at T points, aligned index-wise with predictions.
using LaneMatrix = std::vector<geom::Point2>;

/// Index of the modality whose final point is closest to the final
/// ground-truth point; ties go to the smallest index.
std::size_t final_point_winner(const ad::Tensor & trajectories, const geom::Trajectory & gt);

struct WtaResult
{
  ad::Var loss;
  std::size_t winner = 0;
};

/// Mean smooth L1 between the winning trajectory and the ground truth.
WtaResult wta_loss(const ad::Var & trajectories, const geom::Trajectory & gt, double beta = kSmoothL1Beta);

struct LaneLossResult
{
  ad::Var loss;
  /// Per lane, the non-winner modality whose final point has the smallest
  /// normal distance to that lane.
  std::vector<std::size_t> lane_winners;
  /// Set when no modality other than the ground-truth winner exists (M = 1);
  /// the loss is then zero.
  bool degenerate = false;
};

/**
 * @brief Lane loss over L reference lanes, already divided by L.
 *
 * For each lane the modality m != m_star with the smallest |n| of its final
 * point in the lane's Frenet frame is pulled towards the whole lane matrix
 * with a mean smooth L1. A modality may win several lanes.
 *
 * Throws std::invalid_argument when `lanes` is empty, when a lane does not
 * have T points, or when m_star is out of range.
 */
LaneLossResult lane_loss(
  const ad::Var & trajectories, const std::vector<LaneMatrix> & lanes, std::size_t m_star,
  double beta = kSmoothL1Beta);

/// Hinge scoring loss: sum over m != m_star of max(0, p_m + epsilon - p_m_star).
ad::Var score_loss(const ad::Var & scores, std::size_t m_star, double epsilon);

/// Supervision for one agent.
struct AgentTargets
{
  geom::Trajectory future;
  std::vector<LaneMatrix> lanes;
};

struct RegressionResult
{
  ad::Var loss;
  std::vector<std::size_t> winners;
};

/// Mean over agents of (WTA loss + lane loss). Agents without lanes, or with
/// `use_lane_loss` off, contribute their WTA loss only.
RegressionResult regression_loss(
  const std::vector<ad::Var> & agent_trajectories, const std::vector<AgentTargets> & targets,
  bool use_lane_loss = true, double beta = kSmoothL1Beta);

/// alpha_score * score + alpha_pred * pred + alpha_prop * prop. An invalid
/// (default-constructed) `prop_reg` drops the proposal term.
ad::Var total_loss(
  const ad::Var & score_part, const ad::Var & pred_reg_part, const ad::Var & prop_reg_part,
  const LossWeights & weights);

}  // namespace laneloss::losses

#endif  // LANELOSS__LOSSES_HPP_
