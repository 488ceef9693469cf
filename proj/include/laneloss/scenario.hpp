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

#ifndef LANELOSS__SCENARIO_HPP_
#define LANELOSS__SCENARIO_HPP_

#include "laneloss/geom.hpp"
#include "laneloss/lanegraph.hpp"
#include "laneloss/metrics.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace laneloss::scenario
{

/// Version written into every dataset line.
inline constexpr int kSchemaVersion = 1;

enum class MapFamily { kCorridor = 0, kCurve, kTIntersection, kYIntersection, kMultilane };
inline constexpr std::array<MapFamily, 5> kAllFamilies{
  MapFamily::kCorridor, MapFamily::kCurve, MapFamily::kTIntersection, MapFamily::kYIntersection,
  MapFamily::kMultilane};

std::string to_string(MapFamily f);
/// Throws std::invalid_argument for unknown names.
MapFamily map_family_from_string(const std::string & name);

/// Which turning branches a T-intersection has besides the straight one.
enum class TBranches { kLeft, kRight, kBoth, kRandom };

/**
 * Geometry ranges for the map generator. Values drawn from a range are
 * uniform between min and max.
 */
struct MapParams
{
  double segment_length = 20.0;     ///< nominal lane segment length [m]
  double corridor_length = 200.0;   ///< corridor, curve and multilane length [m]
  double approach_length = 100.0;   ///< road leading into an intersection [m]
  double branch_length = 80.0;      ///< straight part of each branch past a junction [m]
  double curve_radius_min = 120.0;
  double curve_radius_max = 300.0;
  double t_turn_radius_min = 8.0;
  double t_turn_radius_max = 12.0;
  TBranches t_branches = TBranches::kRandom;
  double y_radius_min = 10.0;
  double y_radius_max = 25.0;
  double y_angle_deg = 45.0;        ///< each Y branch diverges by this angle
  std::size_t lane_count = 3;       ///< multilane only
  double lane_width = 3.5;          ///< multilane only [m]
};

/// Lane graph of the requested family in a canonical frame (approach along +x,
/// junction or road start near the origin). Throws std::invalid_argument on
/// inconsistent parameters.
lanegraph::LaneGraph generate_map(MapFamily family, const MapParams & params, std::uint64_t seed);

struct ScenarioConfig
{
  /// Probability per maneuver, indexed like metrics::kAllManeuvers.
  std::array<double, metrics::kManeuverCount> maneuver_mix{0.9275, 0.0382, 0.0231, 0.0053, 0.0059};
  std::vector<MapFamily> families{kAllFamilies.begin(), kAllFamilies.end()};
  double speed_min = 6.0;   ///< [m/s]
  double speed_max = 12.0;  ///< [m/s]
  double noise = 0.1;       ///< positional noise std [m]
  std::size_t agents = 3;   ///< agents per scene including the target
  std::size_t t_o = 20;
  std::size_t t_f = 30;
  double dt = 0.1;          ///< [s]
  double lane_change_duration_min = 2.0;  ///< [s]
  double lane_change_duration_max = 2.5;  ///< [s]
  bool random_pose = true;  ///< apply a random rigid transform per scene
  MapParams map{};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when the mix is not a distribution, a
  /// maneuver with positive mass has no compatible family, or a range is bad.
  void validate() const;
};

nlohmann::json to_json(const ScenarioConfig & c);
ScenarioConfig scenario_config_from_json(const nlohmann::json & j, ScenarioConfig base = {});

struct AgentTrack
{
  geom::Trajectory past;    ///< t_o points, the last one is the current position
  geom::Trajectory future;  ///< t_f points
};

struct Scene
{
  std::uint64_t id = 0;
  MapFamily family = MapFamily::kCorridor;
  metrics::Maneuver maneuver = metrics::Maneuver::kStraight;  ///< label of the target agent
  std::size_t target = 0;
  double dt = 0.1;
  lanegraph::LaneGraph map;
  std::vector<AgentTrack> agents;
};

/// Per-scene seed derived from the dataset seed and the scene index.
std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index);

/// One scene drawn from `config` with the given seed. The maneuver is drawn
/// first, then a compatible map family.
Scene generate_scene(const ScenarioConfig & config, std::uint64_t seed, std::uint64_t id = 0);

/// `count` scenes using scene_seed(config.seed, i).
std::vector<Scene> generate_dataset(const ScenarioConfig & config, std::size_t count);

nlohmann::json to_json(const Scene & s);
/// Throws std::invalid_argument on schema violations.
Scene scene_from_json(const nlohmann::json & j);

/// JSON lines, one scene per line.
void write_dataset(const std::vector<Scene> & scenes, const std::string & path);
/// Throws std::runtime_error naming the 1-based line number of the first bad
/// line.
std::vector<Scene> read_dataset(const std::string & path);

bool operator==(const Scene & a, const Scene & b);

}  // namespace laneloss::scenario

#endif  // LANELOSS__SCENARIO_HPP_
