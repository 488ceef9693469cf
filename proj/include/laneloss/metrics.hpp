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

#ifndef LANELOSS__METRICS_HPP_
#define LANELOSS__METRICS_HPP_

#include "laneloss/geom.hpp"
#include "laneloss/lanegraph.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace laneloss::metrics
{

/**
 * @brief Plain-value multimodal forecast for one agent.
 */
struct MultiModalPrediction
{
  std::vector<geom::Trajectory> trajectories;  ///< M trajectories of T points
  std::vector<double> scores;                  ///< M raw scores, higher is more likely
};

/// Indices of the k highest-scoring modalities, ties by index. Throws
/// std::invalid_argument unless 1 <= k <= M.
std::vector<std::size_t> top_k(const std::vector<double> & scores, std::size_t k);

/// Minimum over the top-k modalities of the mean point error.
double min_ade(const MultiModalPrediction & pred, const geom::Trajectory & gt, std::size_t k);

/// Minimum over the top-k modalities of the final point error.
double min_fde(const MultiModalPrediction & pred, const geom::Trajectory & gt, std::size_t k);

/// Lane-averaged minimum |n| of top-k final points in each lane's Frenet
/// frame. Absent when the agent has no lanes.
std::optional<double> min_lane_fde(
  const MultiModalPrediction & pred, const std::vector<geom::Polyline> & lanes, std::size_t k);

enum class Maneuver { kStraight = 0, kLeftTurn, kRightTurn, kLeftLaneChange, kRightLaneChange };
inline constexpr std::size_t kManeuverCount = 5;
inline constexpr std::array<Maneuver, kManeuverCount> kAllManeuvers{
  Maneuver::kStraight, Maneuver::kLeftTurn, Maneuver::kRightTurn, Maneuver::kLeftLaneChange,
  Maneuver::kRightLaneChange};

std::string to_string(Maneuver m);
/// Throws std::invalid_argument for unknown names.
Maneuver maneuver_from_string(const std::string & name);
bool is_turn(Maneuver m);

struct ClassifierConfig
{
  double turn_threshold_deg = 30.0;
  double lane_change_threshold = 2.5;  ///< [m]
  int heading_baseline = 5;            ///< steps used for heading estimates
  double lane_horizon = 60.0;          ///< [m]
};

/**
 * Labels a ground-truth future. A heading change above the turn threshold is
 * a turn. Otherwise a lateral offset beyond the lane-change threshold, in the
 * frame of the best-aligned initial lane, that ends on a segment outside that
 * lane's chain is a lane change. Everything else is straight. Positive angles
 * and offsets are to the left.
 */
Maneuver classify_maneuver(
  const lanegraph::LaneGraph & map, const geom::Trajectory & past, const geom::Trajectory & future,
  const ClassifierConfig & config = {});

struct ManeuverSample
{
  std::reference_wrapper<const lanegraph::LaneGraph> map;
  std::reference_wrapper<const geom::Trajectory> past;
  std::reference_wrapper<const geom::Trajectory> future;
};

struct ManeuverStats
{
  std::array<std::size_t, kManeuverCount> counts{};
  std::size_t total = 0;

  double fraction(Maneuver m) const;
};

ManeuverStats maneuver_stats(std::span<const Maneuver> labels);
ManeuverStats maneuver_stats(std::span<const ManeuverSample> samples, const ClassifierConfig & config = {});
nlohmann::json to_json(const ManeuverStats & stats);

/// Per-agent metric values; absent entries are excluded from that metric's
/// mean and counted as missing.
struct AgentReport
{
  Maneuver maneuver = Maneuver::kStraight;
  std::map<std::string, std::optional<double>> values;
};

struct MetricSummary
{
  double mean = 0.0;
  std::size_t count = 0;
  std::size_t missing = 0;

  double coverage() const;
};

struct SubsetFilter
{
  std::string name;
  std::vector<Maneuver> labels;
};

/// The turn subset (left and right turns).
SubsetFilter turn_subset();

struct MetricTable
{
  std::map<std::string, MetricSummary> overall;
  std::map<std::string, std::map<std::string, MetricSummary>> subsets;
};

/// Means over agents. The result does not depend on report order: values are
/// sorted before compensated summation.
MetricTable aggregate(std::span<const AgentReport> reports, const std::vector<SubsetFilter> & subsets = {});

/// {metric: {mean, count, missing, coverage, subsets: {name: {...}}}}
nlohmann::json to_json(const MetricTable & table);

}  // namespace laneloss::metrics

#endif  // LANELOSS__METRICS_HPP_
