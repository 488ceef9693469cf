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

#include "laneloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace laneloss::losses
{

namespace
{

struct TrajShape
{
  std::size_t modes;
  std::size_t steps;
};

TrajShape check_trajectories(const ad::Var & trajectories)
{
  const ad::Shape & s = trajectories.shape();
  if (s.rank() != 3 || s[2] != 2 || s[0] == 0 || s[1] == 0) {
    throw std::invalid_argument("expected M x T x 2 trajectories, got " + s.to_string());
  }
  return {s[0], s[1]};
}

geom::Point2 point_of(const ad::Tensor & t, std::size_t m, std::size_t step, std::size_t steps)
{
  const std::size_t base = (m * steps + step) * 2;
  return {t[base], t[base + 1]};
}

ad::Tensor matrix_of(const std::vector<geom::Point2> & pts)
{
  ad::Tensor t(ad::Shape{pts.size(), 2});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t[2 * i] = pts[i].x;
    t[2 * i + 1] = pts[i].y;
  }
  return t;
}

// |n| in the lane's Frenet frame; a lane collapsed to one point (T = 1 or a
// stationary reference) has no direction, so plain distance is used.
double lane_distance(const LaneMatrix & lane, geom::Point2 q)
{
  const bool collapsed = std::all_of(lane.begin(), lane.end(), [&](const geom::Point2 & p) { return p == lane.front(); });
  if (collapsed) return geom::distance(lane.front(), q);
  return std::abs(geom::project(geom::Polyline(lane), q).n);
}

ad::Var mode_trajectory(const ad::Var & trajectories, std::size_t m, std::size_t steps)
{
  return ad::reshape(ad::slice(trajectories, 0, m, m + 1), ad::Shape{steps, 2});
}

}  // namespace

std::size_t final_point_winner(const ad::Tensor & trajectories, const geom::Trajectory & gt)
{
  const std::size_t modes = trajectories.shape()[0];
  const std::size_t steps = trajectories.shape()[1];
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < modes; ++m) {
    const double d = geom::distance(point_of(trajectories, m, steps - 1, steps), gt.back());
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

WtaResult wta_loss(const ad::Var & trajectories, const geom::Trajectory & gt, double beta)
{
  const auto [modes, steps] = check_trajectories(trajectories);
  if (gt.size() != steps) {
    throw std::invalid_argument(
      "wta_loss: ground truth has " + std::to_string(gt.size()) + " points, predictions " +
      std::to_string(steps));
  }
  WtaResult r;
  r.winner = final_point_winner(trajectories.value(), gt);
  ad::Var target = trajectories.tape()->constant(matrix_of(gt));
  r.loss = ad::reduce_mean(ad::smooth_l1(mode_trajectory(trajectories, r.winner, steps), target, beta));
  return r;
}

LaneLossResult lane_loss(
  const ad::Var & trajectories, const std::vector<LaneMatrix> & lanes, std::size_t m_star, double beta)
{
  const auto [modes, steps] = check_trajectories(trajectories);
  if (lanes.empty()) throw std::invalid_argument("lane_loss: no reference lanes");
  if (m_star >= modes) {
    throw std::invalid_argument("lane_loss: winner index " + std::to_string(m_star) + " out of range");
  }
  for (const auto & lane : lanes) {
    if (lane.size() != steps) {
      throw std::invalid_argument(
        "lane_loss: lane has " + std::to_string(lane.size()) + " points, predictions " +
        std::to_string(steps));
    }
  }
  ad::Tape * tape = trajectories.tape();
  LaneLossResult r;
  if (modes == 1) {
    r.degenerate = true;
    r.loss = tape->constant(ad::Tensor::scalar(0.0));
    return r;
  }
  const ad::Tensor & values = trajectories.value();
  ad::Var acc;
  for (const auto & lane : lanes) {
    std::size_t best = modes;
    double best_n = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < modes; ++m) {
      if (m == m_star) continue;
      const double n = lane_distance(lane, point_of(values, m, steps - 1, steps));
      if (n < best_n) {
        best_n = n;
        best = m;
      }
    }
    r.lane_winners.push_back(best);
    ad::Var term = ad::reduce_mean(
      ad::smooth_l1(mode_trajectory(trajectories, best, steps), tape->constant(matrix_of(lane)), beta));
    acc = acc.valid() ? ad::add(acc, term) : term;
  }
  r.loss = ad::scale(acc, 1.0 / static_cast<double>(lanes.size()));
  return r;
}

ad::Var score_loss(const ad::Var & scores, std::size_t m_star, double epsilon)
{
  const std::size_t modes = scores.value().numel();
  if (m_star >= modes) {
    throw std::invalid_argument("score_loss: winner index " + std::to_string(m_star) + " out of range");
  }
  ad::Tape * tape = scores.tape();
  if (modes == 1) return tape->constant(ad::Tensor::scalar(0.0));
  ad::Var flat = ad::reshape(scores, ad::Shape{modes});
  ad::Var winner = ad::slice(flat, 0, m_star, m_star + 1);
  std::vector<ad::Var> others;
  if (m_star > 0) others.push_back(ad::slice(flat, 0, 0, m_star));
  if (m_star + 1 < modes) others.push_back(ad::slice(flat, 0, m_star + 1, modes));
  ad::Var rest = others.size() == 1 ? others[0] : ad::concat(others, 0);
  return ad::reduce_sum(ad::hinge(ad::sub(rest, winner), epsilon));
}

RegressionResult regression_loss(
  const std::vector<ad::Var> & agent_trajectories, const std::vector<AgentTargets> & targets,
  bool use_lane_loss, double beta)
{
  if (agent_trajectories.empty() || agent_trajectories.size() != targets.size()) {
    throw std::invalid_argument("regression_loss: need one target per agent and at least one agent");
  }
  RegressionResult r;
  ad::Var acc;
  for (std::size_t i = 0; i < agent_trajectories.size(); ++i) {
    WtaResult wta = wta_loss(agent_trajectories[i], targets[i].future, beta);
    r.winners.push_back(wta.winner);
    ad::Var agent = wta.loss;
    if (use_lane_loss && !targets[i].lanes.empty()) {
      agent = ad::add(agent, lane_loss(agent_trajectories[i], targets[i].lanes, wta.winner, beta).loss);
    }
    acc = acc.valid() ? ad::add(acc, agent) : agent;
  }
  r.loss = ad::scale(acc, 1.0 / static_cast<double>(agent_trajectories.size()));
  return r;
}

ad::Var total_loss(
  const ad::Var & score_part, const ad::Var & pred_reg_part, const ad::Var & prop_reg_part,
  const LossWeights & weights)
{
  ad::Var total =
    ad::add(ad::scale(score_part, weights.alpha_score), ad::scale(pred_reg_part, weights.alpha_pred));
  if (prop_reg_part.valid()) total = ad::add(total, ad::scale(prop_reg_part, weights.alpha_prop));
  return total;
}

}  // namespace laneloss::losses
