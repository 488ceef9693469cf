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

#include "laneloss/lanegraph.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <tuple>

namespace laneloss::lanegraph
{

LaneGraph::LaneGraph(std::vector<LaneSegment> segments)
{
  for (auto & seg : segments) {
    const SegmentId id = seg.id;
    if (!segments_.emplace(id, std::move(seg)).second) {
      throw std::invalid_argument("LaneGraph: duplicate segment id " + std::to_string(id));
    }
  }
  const auto check = [&](SegmentId from, SegmentId to, const char * kind) {
    if (!segments_.count(to)) {
      throw std::invalid_argument(
        "LaneGraph: segment " + std::to_string(from) + " has dangling " + kind + " " +
        std::to_string(to));
    }
  };
  for (const auto & [id, seg] : segments_) {
    for (SegmentId succ : seg.successors) {
      check(id, succ, "successor");
      ++predecessor_count_[succ];
    }
    if (seg.left_neighbor) check(id, *seg.left_neighbor, "left neighbor");
    if (seg.right_neighbor) check(id, *seg.right_neighbor, "right neighbor");
  }
}

const LaneSegment & LaneGraph::at(SegmentId id) const
{
  const auto it = segments_.find(id);
  if (it == segments_.end()) {
    throw std::out_of_range("LaneGraph: unknown segment id " + std::to_string(id));
  }
  return it->second;
}

bool LaneGraph::has_predecessor(SegmentId id) const { return predecessor_count_.count(id) != 0; }

std::vector<SegmentId> nearby_segments(const LaneGraph & g, geom::Point2 position, double radius)
{
  if (!(radius > 0.0)) {
    throw std::invalid_argument("nearby_segments: radius must be positive");
  }
  std::vector<std::pair<double, SegmentId>> hits;
  for (const auto & [id, seg] : g.segments()) {
    const double d = std::abs(geom::project(seg.centerline, position).n);
    if (d <= radius) hits.emplace_back(d, id);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<SegmentId> out;
  out.reserve(hits.size());
  for (const auto & h : hits) out.push_back(h.second);
  return out;
}

namespace
{

geom::Polyline concat_centerlines(const LaneGraph & g, const std::vector<SegmentId> & ids)
{
  std::vector<geom::Point2> pts;
  for (SegmentId id : ids) {
    const auto & cl = g.at(id).centerline.points();
    pts.insert(pts.end(), cl.begin(), cl.end());
  }
  return geom::Polyline(std::move(pts));
}

void expand_chain(
  const LaneGraph & g, std::vector<SegmentId> & chain, double length, double horizon,
  std::vector<std::vector<SegmentId>> & out)
{
  const auto & seg = g.at(chain.back());
  if (length >= horizon || seg.successors.empty()) {
    out.push_back(chain);
    return;
  }
  bool extended = false;
  for (SegmentId succ : seg.successors) {
    if (std::find(chain.begin(), chain.end(), succ) != chain.end()) continue;
    extended = true;
    chain.push_back(succ);
    expand_chain(g, chain, length + geom::arclength(g.at(succ).centerline), horizon, out);
    chain.pop_back();
  }
  // Every successor closes a cycle: the chain ends at the revisit.
  if (!extended) out.push_back(chain);
}

std::vector<std::vector<SegmentId>> successor_chains(
  const LaneGraph & g, SegmentId seed, double horizon)
{
  std::vector<std::vector<SegmentId>> chains;
  std::vector<SegmentId> chain{seed};
  expand_chain(g, chain, geom::arclength(g.at(seed).centerline), horizon, chains);
  return chains;
}

double jaccard(const std::vector<SegmentId> & a, const std::vector<SegmentId> & b)
{
  const std::set<SegmentId> sa(a.begin(), a.end());
  const std::set<SegmentId> sb(b.begin(), b.end());
  std::size_t shared = 0;
  for (SegmentId id : sa) shared += sb.count(id);
  const std::size_t uni = sa.size() + sb.size() - shared;
  return uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni);
}

struct Candidate
{
  ReferenceLane lane;
  double end_alignment = 0.0;
};

}  // namespace

std::vector<ReferenceLane> expand_forward(const LaneGraph & g, SegmentId seed, double horizon)
{
  if (!g.contains(seed)) {
    throw std::invalid_argument("expand_forward: unknown seed " + std::to_string(seed));
  }
  std::vector<ReferenceLane> lanes;
  for (auto & ids : successor_chains(g, seed, horizon)) {
    geom::Polyline path = concat_centerlines(g, ids);
    if (geom::arclength(path) > horizon) {
      path = geom::truncate_by_arclength(path, 0.0, horizon);
    }
    lanes.push_back(ReferenceLane{std::move(path), std::move(ids), 0.0});
  }
  return lanes;
}

MotionState estimate_motion(const geom::Trajectory & past, double dt, int baseline)
{
  if (past.size() < 2) {
    throw std::invalid_argument("estimate_motion: need at least 2 past points");
  }
  const std::size_t last = past.size() - 1;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(baseline, 1)), last);
  MotionState m;
  m.position = past[last];
  const double d = geom::distance(past[last - k], past[last]);
  m.heading = d > 0.0 ? geom::heading_of(past[last - k], past[last]) : 0.0;
  m.speed = d / (static_cast<double>(k) * dt);
  return m;
}

std::vector<ReferenceLane> extract_reference_lanes(
  const LaneGraph & g, const geom::Trajectory & past, std::size_t max_lanes, double horizon,
  const ExtractionConfig & config)
{
  if (max_lanes < 1) {
    throw std::invalid_argument("extract_reference_lanes: max_lanes must be >= 1");
  }
  // dt only scales speed, which scoring does not use.
  const MotionState motion = estimate_motion(past, 0.1, config.heading_baseline);
  const auto near = nearby_segments(g, motion.position, config.search_radius);
  if (near.empty()) return {};

  const std::set<SegmentId> near_set(near.begin(), near.end());
  std::map<SegmentId, geom::FrenetCoord> proj;
  for (SegmentId id : near) proj[id] = geom::project(g.at(id).centerline, motion.position);

  // A segment the agent has already passed, or has not yet reached while
  // still travelling on a nearby predecessor, is covered by another seed.
  const auto covered_elsewhere = [&](SegmentId id, const geom::FrenetCoord & f) {
    const auto & seg = g.at(id);
    const double len = geom::arclength(seg.centerline);
    if (f.s >= len) {
      for (SegmentId succ : seg.successors) {
        if (near_set.count(succ)) return true;
      }
    }
    if (f.s <= 0.0) {
      for (SegmentId pred : near) {
        const auto & succs = g.at(pred).successors;
        if (std::find(succs.begin(), succs.end(), id) == succs.end()) continue;
        if (proj[pred].s < geom::arclength(g.at(pred).centerline)) return true;
      }
    }
    return false;
  };

  std::vector<SegmentId> seeds;
  const auto add_seed = [&](SegmentId id) {
    if (std::find(seeds.begin(), seeds.end(), id) == seeds.end()) seeds.push_back(id);
  };
  for (SegmentId id : near) {
    if (covered_elsewhere(id, proj[id])) continue;
    add_seed(id);
    const auto & seg = g.at(id);
    if (seg.left_neighbor) add_seed(*seg.left_neighbor);
    if (seg.right_neighbor) add_seed(*seg.right_neighbor);
  }

  std::vector<Candidate> candidates;
  for (SegmentId seed : seeds) {
    const geom::FrenetCoord f = geom::project(g.at(seed).centerline, motion.position);
    for (const auto & ids : successor_chains(g, seed, f.s + horizon)) {
      const geom::Polyline full = concat_centerlines(g, ids);
      const double s0 = f.s;
      const double s1 = std::min(f.s + horizon, geom::arclength(full));
      if (s1 - s0 < config.min_length) continue;

      // Keep only the chain members the clipped path actually covers.
      std::vector<SegmentId> covered;
      double start = 0.0;
      for (SegmentId id : ids) {
        const double end = start + geom::arclength(g.at(id).centerline);
        if (end > s0 && start < s1) covered.push_back(id);
        start = end;
      }
      Candidate c{ReferenceLane{geom::truncate_by_arclength(full, s0, s1), covered, 0.0}, 0.0};
      const double lookahead = std::min(config.heading_lookahead, geom::arclength(c.lane.path));
      const double start_heading = geom::heading_of(c.lane.path.front(), c.lane.path.point_at(lookahead));
      const double end_heading = c.lane.path.heading_at(geom::arclength(c.lane.path));
      c.lane.score = config.heading_weight * std::cos(start_heading - motion.heading) -
                     config.distance_weight * std::abs(f.n);
      c.end_alignment = std::cos(end_heading - motion.heading);
      candidates.push_back(std::move(c));
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate & a, const Candidate & b) {
    return std::tie(b.lane.score, b.end_alignment, a.lane.source_ids) <
           std::tie(a.lane.score, a.end_alignment, b.lane.source_ids);
  });
  // Scores closer than the tie tolerance to a group's best are treated as
  // equal; such groups are ordered by end alignment, which favours the
  // continuation that keeps the current heading.
  for (auto first = candidates.begin(); first != candidates.end();) {
    auto last = std::find_if(first, candidates.end(), [&](const Candidate & c) {
      return first->lane.score - c.lane.score > config.score_tie;
    });
    std::stable_sort(first, last, [](const Candidate & a, const Candidate & b) {
      return std::tie(b.end_alignment, a.lane.source_ids) < std::tie(a.end_alignment, b.lane.source_ids);
    });
    first = last;
  }

  std::vector<ReferenceLane> kept;
  for (auto & c : candidates) {
    if (kept.size() >= max_lanes) break;
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const ReferenceLane & k) {
      return jaccard(k.source_ids, c.lane.source_ids) > config.max_overlap;
    });
    if (!overlaps) kept.push_back(std::move(c.lane));
  }
  return kept;
}

std::vector<geom::Point2> resample_reference(
  const ReferenceLane & lane, std::size_t count, double speed, double dt, double min_travel)
{
  const double length = geom::arclength(lane.path);
  const double travel =
    std::min(std::max(speed * static_cast<double>(count) * dt, min_travel), length);
  std::vector<geom::Point2> out;
  out.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) {
    out.push_back(lane.path.point_at(travel * static_cast<double>(i) / static_cast<double>(count)));
  }
  return out;
}

bool is_successor_chain(const LaneGraph & g, const std::vector<SegmentId> & ids)
{
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    if (!g.contains(ids[i])) return false;
    const auto & succ = g.at(ids[i]).successors;
    if (std::find(succ.begin(), succ.end(), ids[i + 1]) == succ.end()) return false;
  }
  return ids.empty() || g.contains(ids.back());
}

nlohmann::json to_json(const LaneGraph & g)
{
  nlohmann::json segments = nlohmann::json::array();
  for (const auto & [id, seg] : g.segments()) {
    nlohmann::json cl = nlohmann::json::array();
    for (const auto & p : seg.centerline.points()) cl.push_back({p.x, p.y});
    segments.push_back({
      {"id", id},
      {"centerline", std::move(cl)},
      {"successors", seg.successors},
      {"left", seg.left_neighbor ? nlohmann::json(*seg.left_neighbor) : nlohmann::json(nullptr)},
      {"right", seg.right_neighbor ? nlohmann::json(*seg.right_neighbor) : nlohmann::json(nullptr)},
    });
  }
  return {{"segments", std::move(segments)}};
}

LaneGraph lane_graph_from_json(const nlohmann::json & j)
{
  if (!j.is_object() || !j.contains("segments") || !j.at("segments").is_array()) {
    throw std::invalid_argument("lane graph JSON: expected object with array 'segments'");
  }
  std::vector<LaneSegment> segments;
  for (const auto & s : j.at("segments")) {
    std::vector<geom::Point2> pts;
    for (const auto & p : s.at("centerline")) {
      if (!p.is_array() || p.size() != 2) {
        throw std::invalid_argument("lane graph JSON: centerline points must be [x, y]");
      }
      pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    LaneSegment seg{s.at("id").get<SegmentId>(), geom::Polyline(std::move(pts)),
                    s.value("successors", std::vector<SegmentId>{}), std::nullopt, std::nullopt};
    if (s.contains("left") && !s.at("left").is_null()) seg.left_neighbor = s.at("left").get<SegmentId>();
    if (s.contains("right") && !s.at("right").is_null()) seg.right_neighbor = s.at("right").get<SegmentId>();
    segments.push_back(std::move(seg));
  }
  return LaneGraph(std::move(segments));
}

LaneGraph load_lane_graph(const std::string & path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lane graph file " + path);
  return lane_graph_from_json(nlohmann::json::parse(in));
}

void save_lane_graph(const LaneGraph & g, const std::string & path)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write lane graph file " + path);
  out << to_json(g).dump(2) << '\n';
}

}  // namespace laneloss::lanegraph
