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

#ifndef LANELOSS__LANEGRAPH_HPP_
#define LANELOSS__LANEGRAPH_HPP_

#include "laneloss/geom.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace laneloss::lanegraph
{

using SegmentId = std::int64_t;

struct LaneSegment
{
  SegmentId id = 0;
  geom::Polyline centerline;
  std::vector<SegmentId> successors;
  std::optional<SegmentId> left_neighbor;
  std::optional<SegmentId> right_neighbor;
};

/**
 * @brief Directed graph of lane segments keyed by id.
 *
 * The constructor rejects duplicate ids and edges that point outside the graph
 * (std::invalid_argument). The graph is immutable afterwards.
 */
class LaneGraph
{
public:
  LaneGraph() = default;
  explicit LaneGraph(std::vector<LaneSegment> segments);

  const std::map<SegmentId, LaneSegment> & segments() const { return segments_; }
  const LaneSegment & at(SegmentId id) const;
  bool contains(SegmentId id) const { return segments_.count(id) != 0; }
  bool has_predecessor(SegmentId id) const;
  std::size_t size() const { return segments_.size(); }

private:
  std::map<SegmentId, LaneSegment> segments_;
  std::map<SegmentId, int> predecessor_count_;
};

struct ReferenceLane
{
  geom::Polyline path;
  std::vector<SegmentId> source_ids;
  double score = 0.0;
};

/// Tunables of reference-lane extraction.
struct ExtractionConfig
{
  double search_radius = 10.0;     ///< nearby-segment radius, also the off-map threshold [m]
  double heading_weight = 1.0;     ///< w_h
  double distance_weight = 0.1;    ///< w_d [1/m]
  double max_overlap = 0.5;        ///< Jaccard fraction of shared source ids that counts as overlap
  double min_length = 5.0;         ///< shortest admissible clipped path [m]
  int heading_baseline = 5;        ///< steps used to estimate heading and speed from a past track
  double heading_lookahead = 5.0;  ///< lane heading is taken over this initial stretch [m]
  double score_tie = 0.02;         ///< score gap below which lanes are ranked by end alignment
};

/// Segments whose centerline comes within `radius` of `position`, nearest
/// first, ties by id. Throws std::invalid_argument when radius <= 0.
std::vector<SegmentId> nearby_segments(const LaneGraph & g, geom::Point2 position, double radius);

/// Depth-first enumeration of maximal successor chains from `seed`. A chain
/// stops once its centerline length reaches `horizon`, at a dead end, or when
/// the next segment was already visited on this chain.
std::vector<ReferenceLane> expand_forward(const LaneGraph & g, SegmentId seed, double horizon);

/// Up to `max_lanes` reference lanes for an agent with the given past track,
/// best score first, each clipped to start at the agent's projection and to
/// span at most `horizon` meters. Empty when the agent is off-map.
std::vector<ReferenceLane> extract_reference_lanes(
  const LaneGraph & g, const geom::Trajectory & past, std::size_t max_lanes, double horizon,
  const ExtractionConfig & config = {});

/// Samples `count` points equally spaced over [0, D] along the lane, where
/// D = clamp(max(speed * count * dt, min_travel), lane length).
std::vector<geom::Point2> resample_reference(
  const ReferenceLane & lane, std::size_t count, double speed, double dt, double min_travel = 5.0);

/// Heading and speed estimated from the last `baseline` steps of a track.
struct MotionState
{
  geom::Point2 position;
  double heading = 0.0;
  double speed = 0.0;
};
MotionState estimate_motion(const geom::Trajectory & past, double dt, int baseline = 5);

/// True when `ids` is a successor chain in `g`.
bool is_successor_chain(const LaneGraph & g, const std::vector<SegmentId> & ids);

nlohmann::json to_json(const LaneGraph & g);
LaneGraph lane_graph_from_json(const nlohmann::json & j);
LaneGraph load_lane_graph(const std::string & path);
void save_lane_graph(const LaneGraph & g, const std::string & path);

}  // namespace laneloss::lanegraph

#endif  // LANELOSS__LANEGRAPH_HPP_
