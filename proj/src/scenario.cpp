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

#include "laneloss/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

namespace laneloss::scenario
{

using geom::Point2;
using lanegraph::LaneSegment;
using lanegraph::SegmentId;
using metrics::Maneuver;

namespace
{

constexpr double kPointSpacing = 0.5;  // centerline sample spacing on arcs [m]

struct Pose
{
  Point2 p;
  double heading = 0.0;
};

// Point reached after travelling `u` along a constant-curvature path.
Point2 advance(const Pose & pose, double kappa, double u)
{
  const double h = pose.heading;
  if (kappa == 0.0) return {pose.p.x + u * std::cos(h), pose.p.y + u * std::sin(h)};
  return {
    pose.p.x + (std::sin(h + kappa * u) - std::sin(h)) / kappa,
    pose.p.y - (std::cos(h + kappa * u) - std::cos(h)) / kappa};
}

struct Layout
{
  std::map<SegmentId, LaneSegment> segments;
  std::map<std::string, std::vector<SegmentId>> routes;
  std::map<std::string, double> arc_start;   // route -> arc length where its turn begins
  std::map<std::string, double> arc_length;  // route -> length of that turn
};

// Appends a chain of segments following a constant-curvature path of
// `length`, split into pieces of about `segment_length`. Returns the ids.
std::vector<SegmentId> add_chain(
  Layout & layout, SegmentId first_id, Pose & pose, double kappa, double length, double segment_length)
{
  const auto pieces = static_cast<std::size_t>(std::max(1.0, std::round(length / segment_length)));
  const double piece = length / static_cast<double>(pieces);
  std::vector<SegmentId> ids;
  for (std::size_t i = 0; i < pieces; ++i) {
    const auto samples =
      kappa == 0.0 ? std::size_t{1} : static_cast<std::size_t>(std::ceil(piece / kPointSpacing));
    std::vector<Point2> pts{pose.p};
    for (std::size_t j = 1; j <= samples; ++j) {
      pts.push_back(advance(pose, kappa, piece * static_cast<double>(j) / static_cast<double>(samples)));
    }
    pose = {pts.back(), pose.heading + kappa * piece};
    const SegmentId id = first_id + static_cast<SegmentId>(i);
    if (!ids.empty()) layout.segments.at(ids.back()).successors.push_back(id);
    layout.segments.emplace(id, LaneSegment{id, geom::Polyline(std::move(pts)), {}, {}, {}});
    ids.push_back(id);
  }
  return ids;
}

void link(Layout & layout, SegmentId from, SegmentId to) { layout.segments.at(from).successors.push_back(to); }

std::vector<SegmentId> joined(std::vector<SegmentId> a, const std::vector<SegmentId> & b)
{
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

double uniform(std::mt19937_64 & rng, double lo, double hi)
{
  if (!(hi > lo)) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool coin(std::mt19937_64 & rng) { return uniform(rng, 0.0, 1.0) < 0.5; }

// Adds a turning branch: an arc of `angle` (signed, left positive) with radius
// `radius`, then a straight part. Ids start at `base`.
std::vector<SegmentId> add_turn_branch(
  Layout & layout, SegmentId base, Pose pose, double radius, double angle, double straight_length,
  double segment_length)
{
  const double kappa = (angle > 0.0 ? 1.0 : -1.0) / radius;
  const double arc = std::abs(angle) * radius;
  // One segment for the whole arc keeps the junction topology simple.
  auto ids = add_chain(layout, base, pose, kappa, arc, arc);
  const auto tail = add_chain(layout, base + 1, pose, 0.0, straight_length, segment_length);
  link(layout, ids.back(), tail.front());
  return joined(ids, tail);
}

Layout build_layout(MapFamily family, const MapParams & mp, std::mt19937_64 & rng)
{
  if (!(mp.segment_length > 0.0) || !(mp.corridor_length > 0.0) || !(mp.approach_length > 0.0) ||
      !(mp.branch_length > 0.0)) {
    throw std::invalid_argument("MapParams: lengths must be positive");
  }
  Layout layout;
  switch (family) {
    case MapFamily::kCorridor: {
      Pose pose{{0.0, 0.0}, 0.0};
      layout.routes["main"] = add_chain(layout, 1, pose, 0.0, mp.corridor_length, mp.segment_length);
      break;
    }
    case MapFamily::kCurve: {
      const double radius = uniform(rng, mp.curve_radius_min, mp.curve_radius_max);
      const double sign = coin(rng) ? 1.0 : -1.0;
      if (!(radius > 0.0)) throw std::invalid_argument("MapParams: curve radius must be positive");
      Pose pose{{0.0, 0.0}, 0.0};
      layout.routes["main"] = add_chain(layout, 1, pose, sign / radius, mp.corridor_length, mp.segment_length);
      break;
    }
    case MapFamily::kTIntersection: {
      const double radius = uniform(rng, mp.t_turn_radius_min, mp.t_turn_radius_max);
      TBranches branches = mp.t_branches;
      if (branches == TBranches::kRandom) {
        const double u = uniform(rng, 0.0, 3.0);
        branches = u < 1.0 ? TBranches::kLeft : (u < 2.0 ? TBranches::kRight : TBranches::kBoth);
      }
      if (!(radius > 0.0)) throw std::invalid_argument("MapParams: turn radius must be positive");
      Pose pose{{-mp.approach_length, 0.0}, 0.0};
      const auto approach = add_chain(layout, 1, pose, 0.0, mp.approach_length, mp.segment_length);
      pose.p = {0.0, 0.0};
      Pose straight_pose = pose;
      const auto straight = add_chain(layout, 101, straight_pose, 0.0, mp.branch_length, mp.segment_length);
      link(layout, approach.back(), straight.front());
      layout.routes["straight"] = joined(approach, straight);
      const double quarter = std::numbers::pi / 2.0;
      if (branches != TBranches::kRight) {
        const auto left = add_turn_branch(layout, 201, pose, radius, quarter, mp.branch_length, mp.segment_length);
        link(layout, approach.back(), left.front());
        layout.routes["left"] = joined(approach, left);
        layout.arc_start["left"] = mp.approach_length;
        layout.arc_length["left"] = quarter * radius;
      }
      if (branches != TBranches::kLeft) {
        const auto right =
          add_turn_branch(layout, 301, pose, radius, -quarter, mp.branch_length, mp.segment_length);
        link(layout, approach.back(), right.front());
        layout.routes["right"] = joined(approach, right);
        layout.arc_start["right"] = mp.approach_length;
        layout.arc_length["right"] = quarter * radius;
      }
      break;
    }
    case MapFamily::kYIntersection: {
      const double radius = uniform(rng, mp.y_radius_min, mp.y_radius_max);
      const double angle = mp.y_angle_deg * std::numbers::pi / 180.0;
      if (!(radius > 0.0) || !(angle > 0.0)) {
        throw std::invalid_argument("MapParams: Y radius and angle must be positive");
      }
      Pose pose{{-mp.approach_length, 0.0}, 0.0};
      const auto approach = add_chain(layout, 1, pose, 0.0, mp.approach_length, mp.segment_length);
      pose.p = {0.0, 0.0};
      const auto left = add_turn_branch(layout, 201, pose, radius, angle, mp.branch_length, mp.segment_length);
      const auto right = add_turn_branch(layout, 301, pose, radius, -angle, mp.branch_length, mp.segment_length);
      link(layout, approach.back(), left.front());
      link(layout, approach.back(), right.front());
      layout.routes["left"] = joined(approach, left);
      layout.routes["right"] = joined(approach, right);
      for (const char * r : {"left", "right"}) {
        layout.arc_start[r] = mp.approach_length;
        layout.arc_length[r] = angle * radius;
      }
      break;
    }
    case MapFamily::kMultilane: {
      if (mp.lane_count < 2 || !(mp.lane_width > 0.0)) {
        throw std::invalid_argument("MapParams: multilane needs >= 2 lanes of positive width");
      }
      std::vector<std::vector<SegmentId>> lanes;
      for (std::size_t j = 0; j < mp.lane_count; ++j) {
        Pose pose{{0.0, mp.lane_width * static_cast<double>(j)}, 0.0};
        const auto base = static_cast<SegmentId>((j + 1) * 1000 + 1);
        lanes.push_back(add_chain(layout, base, pose, 0.0, mp.corridor_length, mp.segment_length));
        layout.routes["lane" + std::to_string(j)] = lanes.back();
      }
      // Lane 0 is the rightmost; left is +y.
      for (std::size_t j = 0; j < mp.lane_count; ++j) {
        for (std::size_t i = 0; i < lanes[j].size(); ++i) {
          auto & seg = layout.segments.at(lanes[j][i]);
          if (j + 1 < mp.lane_count) seg.left_neighbor = lanes[j + 1][i];
          if (j > 0) seg.right_neighbor = lanes[j - 1][i];
        }
      }
      break;
    }
  }
  return layout;
}

std::vector<LaneSegment> segments_of(const Layout & layout, const geom::RigidTransform & tf)
{
  std::vector<LaneSegment> out;
  for (const auto & [id, seg] : layout.segments) {
    LaneSegment s = seg;
    s.centerline = geom::transformed(seg.centerline, tf);
    out.push_back(std::move(s));
  }
  return out;
}

geom::Polyline route_path(const Layout & layout, const std::vector<SegmentId> & ids)
{
  std::vector<Point2> pts;
  for (SegmentId id : ids) {
    const auto & p = layout.segments.at(id).centerline.points();
    pts.insert(pts.end(), p.begin(), p.end());
  }
  return geom::Polyline(std::move(pts));
}

bool compatible(Maneuver m, MapFamily f)
{
  switch (m) {
    case Maneuver::kStraight: return f != MapFamily::kYIntersection;
    case Maneuver::kLeftTurn:
    case Maneuver::kRightTurn: return f == MapFamily::kTIntersection || f == MapFamily::kYIntersection;
    case Maneuver::kLeftLaneChange:
    case Maneuver::kRightLaneChange: return f == MapFamily::kMultilane;
  }
  return false;
}

// Route names a lane-keeping agent may follow.
std::vector<std::string> keep_routes(const Layout & layout, MapFamily f)
{
  if (f == MapFamily::kTIntersection) return {"straight"};
  std::vector<std::string> out;
  for (const auto & [name, ids] : layout.routes) out.push_back(name);
  return out;
}

double smoothstep(double x)
{
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

struct Motion
{
  std::string route;
  double speed = 0.0;
  double s_now = 0.0;
  double lateral = 0.0;   // signed final lateral shift [m], 0 for lane keeping
  double shift_start = 0.0;  // [s] after the current time
  double shift_duration = 1.0;  // [s]
};

AgentTrack sample_track(const geom::Polyline & path, const Motion & m, std::size_t t_o, std::size_t t_f, double dt)
{
  AgentTrack track;
  const auto to = static_cast<long>(t_o);
  const auto tf = static_cast<long>(t_f);
  for (long t = -(to - 1); t <= tf; ++t) {
    const double s = m.s_now + m.speed * dt * static_cast<double>(t);
    Point2 p = path.point_at(s);
    if (m.lateral != 0.0 && t > 0) {
      const double h = path.heading_at(s);
      const double tau = dt * static_cast<double>(t);
      const double shift = m.lateral * smoothstep((tau - m.shift_start) / m.shift_duration);
      p = p + shift * Point2{-std::sin(h), std::cos(h)};
    }
    (t <= 0 ? track.past : track.future).push_back(p);
  }
  return track;
}

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(MapFamily f)
{
  switch (f) {
    case MapFamily::kCorridor: return "corridor";
    case MapFamily::kCurve: return "curve";
    case MapFamily::kTIntersection: return "t_intersection";
    case MapFamily::kYIntersection: return "y_intersection";
    case MapFamily::kMultilane: return "multilane";
  }
  return "unknown";
}

MapFamily map_family_from_string(const std::string & name)
{
  for (MapFamily f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown map family '" + name + "'");
}

lanegraph::LaneGraph generate_map(MapFamily family, const MapParams & params, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  const Layout layout = build_layout(family, params, rng);
  return lanegraph::LaneGraph(segments_of(layout, {}));
}

void ScenarioConfig::validate() const
{
  const auto fail = [](const std::string & what) { throw std::invalid_argument("ScenarioConfig: " + what); };
  double sum = 0.0;
  for (double p : maneuver_mix) {
    if (!(p >= 0.0)) fail("maneuver_mix entries must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) fail("maneuver_mix must sum to 1");
  if (families.empty()) fail("families must not be empty");
  for (std::size_t i = 0; i < metrics::kManeuverCount; ++i) {
    if (maneuver_mix[i] <= 0.0) continue;
    const bool ok = std::any_of(families.begin(), families.end(), [&](MapFamily f) {
      return compatible(metrics::kAllManeuvers[i], f);
    });
    if (!ok) fail("no enabled map family supports " + metrics::to_string(metrics::kAllManeuvers[i]));
  }
  if (!(speed_min > 0.0) || speed_max < speed_min) fail("speeds must satisfy 0 < speed_min <= speed_max");
  if (!(noise >= 0.0)) fail("noise must be non-negative");
  if (agents < 1) fail("agents must be >= 1");
  if (t_o < 2 || t_f < 2) fail("t_o and t_f must be >= 2");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(lane_change_duration_min > 0.0) || lane_change_duration_max < lane_change_duration_min) {
    fail("lane change duration range is invalid");
  }
}

nlohmann::json to_json(const ScenarioConfig & c)
{
  nlohmann::json mix = nlohmann::json::object();
  for (std::size_t i = 0; i < metrics::kManeuverCount; ++i) {
    mix[metrics::to_string(metrics::kAllManeuvers[i])] = c.maneuver_mix[i];
  }
  nlohmann::json families = nlohmann::json::array();
  for (MapFamily f : c.families) families.push_back(to_string(f));
  return {
    {"maneuver_mix", mix},
    {"families", families},
    {"speed_min", c.speed_min},
    {"speed_max", c.speed_max},
    {"noise", c.noise},
    {"agents", c.agents},
    {"t_o", c.t_o},
    {"t_f", c.t_f},
    {"dt", c.dt},
    {"lane_change_duration_min", c.lane_change_duration_min},
    {"lane_change_duration_max", c.lane_change_duration_max},
    {"random_pose", c.random_pose},
    {"seed", c.seed},
  };
}

ScenarioConfig scenario_config_from_json(const nlohmann::json & j, ScenarioConfig c)
{
  if (j.contains("maneuver_mix")) {
    const auto & mix = j.at("maneuver_mix");
    if (!mix.is_object()) throw std::invalid_argument("maneuver_mix must be an object");
    c.maneuver_mix.fill(0.0);
    for (const auto & [name, p] : mix.items()) {
      c.maneuver_mix[static_cast<std::size_t>(metrics::maneuver_from_string(name))] = p.get<double>();
    }
  }
  if (j.contains("families")) {
    c.families.clear();
    for (const auto & f : j.at("families")) c.families.push_back(map_family_from_string(f.get<std::string>()));
  }
  c.speed_min = j.value("speed_min", c.speed_min);
  c.speed_max = j.value("speed_max", c.speed_max);
  c.noise = j.value("noise", c.noise);
  c.agents = j.value("agents", c.agents);
  c.t_o = j.value("t_o", c.t_o);
  c.t_f = j.value("t_f", c.t_f);
  c.dt = j.value("dt", c.dt);
  c.lane_change_duration_min = j.value("lane_change_duration_min", c.lane_change_duration_min);
  c.lane_change_duration_max = j.value("lane_change_duration_max", c.lane_change_duration_max);
  c.random_pose = j.value("random_pose", c.random_pose);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index)
{
  return splitmix64(seed ^ splitmix64(index));
}

Scene generate_scene(const ScenarioConfig & config, std::uint64_t seed, std::uint64_t id)
{
  config.validate();
  std::mt19937_64 rng(seed);
  Scene scene;
  scene.id = id;
  scene.dt = config.dt;

  // Maneuver first, then a family that can host it.
  const double u = uniform(rng, 0.0, 1.0);
  double acc = 0.0;
  std::size_t pick = 0;
  for (std::size_t i = 0; i < metrics::kManeuverCount; ++i) {
    if (config.maneuver_mix[i] <= 0.0) continue;
    pick = i;
    acc += config.maneuver_mix[i];
    if (u < acc) break;
  }
  scene.maneuver = metrics::kAllManeuvers[pick];
  std::vector<MapFamily> hosts;
  for (MapFamily f : config.families) {
    if (compatible(scene.maneuver, f)) hosts.push_back(f);
  }
  scene.family = hosts[std::min<std::size_t>(
    hosts.size() - 1, static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(hosts.size()))))];

  const double dt = config.dt;
  const double horizon = dt * static_cast<double>(config.t_f);
  const double history = dt * static_cast<double>(config.t_o - 1);
  const double speed = uniform(rng, config.speed_min, config.speed_max);
  // Heading estimates look five steps ahead; keep that window off the arc.
  const double end_margin = 5.0 * dt * speed + 0.5;
  const bool turning = metrics::is_turn(scene.maneuver);
  const bool left = scene.maneuver == Maneuver::kLeftTurn || scene.maneuver == Maneuver::kLeftLaneChange;

  MapParams mp = config.map;
  double lead_min = 0.5;  // distance from the current position to the turn
  if (turning && scene.family == MapFamily::kTIntersection) {
    mp.t_branches = coin(rng) ? TBranches::kBoth : (left ? TBranches::kLeft : TBranches::kRight);
    const double arc_max = horizon * speed - lead_min - end_margin;
    mp.t_turn_radius_max = std::max(
      mp.t_turn_radius_min, std::min(mp.t_turn_radius_max, arc_max / (std::numbers::pi / 2.0)));
  } else if (turning) {
    lead_min = 6.0 * dt * speed + 0.5;
    const double arc_max = horizon * speed - lead_min - end_margin;
    const double angle = mp.y_angle_deg * std::numbers::pi / 180.0;
    mp.y_radius_max = std::max(mp.y_radius_min, std::min(mp.y_radius_max, arc_max / angle));
  }
  const Layout layout = build_layout(scene.family, mp, rng);

  Motion target;
  target.speed = speed;
  if (turning) {
    target.route = left ? "left" : "right";
  } else if (scene.family == MapFamily::kMultilane) {
    const std::size_t lanes = mp.lane_count;
    std::size_t lo = 0, hi = lanes - 1;
    if (scene.maneuver == Maneuver::kLeftLaneChange) hi = lanes - 2;
    if (scene.maneuver == Maneuver::kRightLaneChange) lo = 1;
    const auto lane = lo + std::min<std::size_t>(
                             hi - lo, static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(hi - lo + 1))));
    target.route = "lane" + std::to_string(lane);
  } else {
    const auto names = keep_routes(layout, scene.family);
    target.route = names[std::min<std::size_t>(
      names.size() - 1, static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(names.size()))))];
  }
  const geom::Polyline target_path = route_path(layout, layout.routes.at(target.route));
  const double length = geom::arclength(target_path);
  const double s_min = history * speed + 1.0;
  const double s_max = length - horizon * speed - 1.0;
  if (turning) {
    const double arc = layout.arc_length.at(target.route);
    const double lead = uniform(rng, lead_min, std::max(lead_min, horizon * speed - arc - end_margin));
    target.s_now = layout.arc_start.at(target.route) - lead;
  } else if (scene.family == MapFamily::kTIntersection) {
    const double junction = mp.approach_length;
    target.s_now = uniform(rng, std::max(s_min, junction - 40.0), std::min(s_max, junction + 10.0));
  } else {
    target.s_now = uniform(rng, s_min, s_max);
  }
  if (scene.maneuver == Maneuver::kLeftLaneChange || scene.maneuver == Maneuver::kRightLaneChange) {
    target.lateral = (left ? 1.0 : -1.0) * mp.lane_width;
    target.shift_duration = std::min(
      uniform(rng, config.lane_change_duration_min, config.lane_change_duration_max), horizon - 2.0 * dt);
    target.shift_start = uniform(rng, 0.0, std::max(0.0, horizon - target.shift_duration - 2.0 * dt));
  }

  std::vector<AgentTrack> tracks;
  tracks.push_back(sample_track(target_path, target, config.t_o, config.t_f, dt));
  const auto names = keep_routes(layout, scene.family);
  for (std::size_t a = 1; a < config.agents; ++a) {
    Motion other;
    other.route = names[std::min<std::size_t>(
      names.size() - 1, static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(names.size()))))];
    other.speed = uniform(rng, config.speed_min, config.speed_max);
    const double gap = uniform(rng, 10.0, 40.0) * (coin(rng) ? 1.0 : -1.0);
    const geom::Polyline path = route_path(layout, layout.routes.at(other.route));
    const double lo = history * other.speed + 1.0;
    const double hi = geom::arclength(path) - horizon * other.speed - 1.0;
    other.s_now = std::clamp(target.s_now + gap, lo, std::max(lo, hi));
    tracks.push_back(sample_track(path, other, config.t_o, config.t_f, dt));
  }

  geom::RigidTransform pose;
  if (config.random_pose) {
    pose.theta = uniform(rng, -std::numbers::pi, std::numbers::pi);
    pose.translation = {uniform(rng, -500.0, 500.0), uniform(rng, -500.0, 500.0)};
  }
  scene.map = lanegraph::LaneGraph(segments_of(layout, pose));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto & track : tracks) {
    for (auto * part : {&track.past, &track.future}) {
      for (auto & p : *part) {
        p = pose.apply(p);
        if (config.noise > 0.0) {
          const double nx = noise(rng);
          const double ny = noise(rng);
          p = p + config.noise * Point2{nx, ny};
        }
      }
    }
  }
  scene.agents = std::move(tracks);
  scene.target = 0;
  return scene;
}

std::vector<Scene> generate_dataset(const ScenarioConfig & config, std::size_t count)
{
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_scene(config, scene_seed(config.seed, i), i));
  return out;
}

namespace
{

nlohmann::json points_json(const geom::Trajectory & t)
{
  nlohmann::json a = nlohmann::json::array();
  for (const auto & p : t) a.push_back({p.x, p.y});
  return a;
}

geom::Trajectory points_from(const nlohmann::json & j)
{
  geom::Trajectory t;
  for (const auto & p : j) {
    if (!p.is_array() || p.size() != 2) throw std::invalid_argument("points must be [x, y] pairs");
    t.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return t;
}

}  // namespace

nlohmann::json to_json(const Scene & s)
{
  nlohmann::json agents = nlohmann::json::array();
  for (const auto & a : s.agents) agents.push_back({{"past", points_json(a.past)}, {"future", points_json(a.future)}});
  return {
    {"schema_version", kSchemaVersion},
    {"id", s.id},
    {"family", to_string(s.family)},
    {"maneuver", metrics::to_string(s.maneuver)},
    {"target", s.target},
    {"dt", s.dt},
    {"map", lanegraph::to_json(s.map)},
    {"agents", agents},
  };
}

Scene scene_from_json(const nlohmann::json & j)
{
  if (!j.is_object()) throw std::invalid_argument("scene must be a JSON object");
  if (!j.contains("schema_version")) throw std::invalid_argument("missing schema_version");
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw std::invalid_argument("unsupported schema_version " + std::to_string(version));
  }
  Scene s;
  s.id = j.at("id").get<std::uint64_t>();
  s.family = map_family_from_string(j.at("family").get<std::string>());
  s.maneuver = metrics::maneuver_from_string(j.at("maneuver").get<std::string>());
  s.target = j.at("target").get<std::size_t>();
  s.dt = j.at("dt").get<double>();
  s.map = lanegraph::lane_graph_from_json(j.at("map"));
  for (const auto & a : j.at("agents")) s.agents.push_back({points_from(a.at("past")), points_from(a.at("future"))});
  if (s.agents.empty() || s.target >= s.agents.size()) throw std::invalid_argument("target index out of range");
  return s;
}

void write_dataset(const std::vector<Scene> & scenes, const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto & s : scenes) out << to_json(s).dump() << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<Scene> read_dataset(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  std::vector<Scene> scenes;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      scenes.push_back(scene_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception & e) {
      throw std::runtime_error(path + ": line " + std::to_string(number) + ": " + e.what());
    }
  }
  return scenes;
}

bool operator==(const Scene & a, const Scene & b)
{
  if (a.id != b.id || a.family != b.family || a.maneuver != b.maneuver || a.target != b.target || a.dt != b.dt ||
      a.agents.size() != b.agents.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    if (a.agents[i].past != b.agents[i].past || a.agents[i].future != b.agents[i].future) return false;
  }
  return lanegraph::to_json(a.map) == lanegraph::to_json(b.map);
}

}  // namespace laneloss::scenario
