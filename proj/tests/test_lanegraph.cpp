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
#include "laneloss/scenario.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>

namespace laneloss::lanegraph
{
namespace
{

using geom::Point2;
using geom::Polyline;

LaneSegment seg(SegmentId id, std::vector<Point2> pts, std::vector<SegmentId> succ = {})
{
  return LaneSegment{id, Polyline(std::move(pts)), std::move(succ), std::nullopt, std::nullopt};
}

// Approach 1 along +x into a junction at (50, 0); 2 continues straight,
// 3 turns left, 4 turns right. Branch legs are 60 m.
LaneGraph t_junction()
{
  return LaneGraph({
    seg(1, {{0, 0}, {50, 0}}, {2, 3, 4}),
    seg(2, {{50, 0}, {110, 0}}),
    seg(3, {{50, 0}, {50, 60}}),
    seg(4, {{50, 0}, {50, -60}}),
  });
}

geom::Trajectory straight_past(Point2 end, double heading, double speed = 10.0, std::size_t n = 20)
{
  geom::Trajectory past;
  for (std::size_t i = 0; i < n; ++i) {
    const double back = speed * 0.1 * static_cast<double>(n - 1 - i);
    past.push_back({end.x - back * std::cos(heading), end.y - back * std::sin(heading)});
  }
  return past;
}

double jaccard(const std::vector<SegmentId> & a, const std::vector<SegmentId> & b)
{
  std::set<SegmentId> sa(a.begin(), a.end()), sb(b.begin(), b.end()), uni = sa;
  uni.insert(sb.begin(), sb.end());
  std::size_t shared = 0;
  for (auto id : sa) shared += sb.count(id);
  return static_cast<double>(shared) / static_cast<double>(uni.size());
}

TEST(LaneGraph, RejectsDanglingAndDuplicateIds)
{
  EXPECT_THROW(LaneGraph({seg(1, {{0, 0}, {1, 0}}, {7})}), std::invalid_argument);
  EXPECT_THROW(LaneGraph({seg(1, {{0, 0}, {1, 0}}), seg(1, {{1, 0}, {2, 0}})}), std::invalid_argument);
  LaneSegment s = seg(1, {{0, 0}, {1, 0}});
  s.left_neighbor = 9;
  EXPECT_THROW(LaneGraph({s}), std::invalid_argument);
}

TEST(LaneGraph, JsonRoundTrip)
{
  auto segments = std::vector<LaneSegment>{seg(1, {{0, 0}, {10, 0}}, {2}), seg(2, {{10, 0}, {20, 1}}),
                                           seg(3, {{0, 3.5}, {10, 3.5}})};
  segments[0].left_neighbor = 3;
  segments[2].right_neighbor = 1;
  const LaneGraph g(segments);
  const LaneGraph back = lane_graph_from_json(nlohmann::json::parse(to_json(g).dump()));
  EXPECT_EQ(to_json(back), to_json(g));
  EXPECT_EQ(back.at(1).left_neighbor, std::optional<SegmentId>(3));

  const auto path = std::filesystem::temp_directory_path() / "laneloss_graph_roundtrip.json";
  save_lane_graph(g, path.string());
  EXPECT_EQ(to_json(load_lane_graph(path.string())), to_json(g));
  std::filesystem::remove(path);

  auto bad = to_json(g);
  bad["segments"][0]["successors"] = {42};
  EXPECT_THROW(lane_graph_from_json(bad), std::exception);
}

TEST(NearbySegments, SingleLaneAndFarAway)
{
  const LaneGraph g({seg(7, {{-50, 0}, {50, 0}})});
  EXPECT_EQ(nearby_segments(g, {0, 1}, 5.0), std::vector<SegmentId>{7});
  EXPECT_TRUE(nearby_segments(g, {0, 100}, 5.0).empty());
}

TEST(NearbySegments, ThreeLaneOrderMatchesOracleDistances)
{
  const LaneGraph g({seg(10, {{0, -3.5}, {100, -3.5}}), seg(11, {{0, 0}, {100, 0}}), seg(12, {{0, 3.5}, {100, 3.5}})});
  const Point2 q{40, 0.3};
  std::vector<SegmentId> ids{10, 11, 12};
  std::stable_sort(ids.begin(), ids.end(), [&](SegmentId a, SegmentId b) {
    return oracle::path_distance(test::to_oracle(g.at(a).centerline.points()), test::to_oracle(q)) <
           oracle::path_distance(test::to_oracle(g.at(b).centerline.points()), test::to_oracle(q));
  });
  EXPECT_EQ(nearby_segments(g, q, 20.0), ids);
  EXPECT_EQ(ids, (std::vector<SegmentId>{11, 12, 10}));
}

TEST(ExpandForward, LinearChainAndFork)
{
  const LaneGraph chain({seg(1, {{0, 0}, {10, 0}}, {2}), seg(2, {{10, 0}, {20, 0}}, {3}), seg(3, {{20, 0}, {30, 0}})});
  auto lanes = expand_forward(chain, 1, 25.0);
  ASSERT_EQ(lanes.size(), 1u);
  EXPECT_EQ(lanes[0].source_ids, (std::vector<SegmentId>{1, 2, 3}));
  EXPECT_NEAR(geom::arclength(lanes[0].path), 25.0, 1e-12);

  const LaneGraph fork({seg(1, {{0, 0}, {10, 0}}, {2, 3}), seg(2, {{10, 0}, {20, 0}}), seg(3, {{10, 0}, {20, 5}})});
  lanes = expand_forward(fork, 1, 100.0);
  ASSERT_EQ(lanes.size(), 2u);
  EXPECT_EQ(lanes[0].source_ids, (std::vector<SegmentId>{1, 2}));
  EXPECT_EQ(lanes[1].source_ids, (std::vector<SegmentId>{1, 3}));
}

TEST(ExpandForward, YJunctionClippedLengths)
{
  // 40 m approach, then three 50 m branches at -30, 0 and +30 degrees.
  std::vector<LaneSegment> s{seg(1, {{0, 0}, {40, 0}}, {2, 3, 4})};
  const double angles[] = {-0.5236, 0.0, 0.5236};
  for (int i = 0; i < 3; ++i) {
    s.push_back(seg(2 + i, {{40, 0}, {40 + 50 * std::cos(angles[i]), 50 * std::sin(angles[i])}}));
  }
  const auto lanes = expand_forward(LaneGraph(s), 1, 60.0);
  ASSERT_EQ(lanes.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(lanes[i].source_ids, (std::vector<SegmentId>{1, static_cast<SegmentId>(2 + i)}));
    // Walked by hand: 40 m approach plus 20 m of branch.
    EXPECT_NEAR(geom::arclength(lanes[i].path), 60.0, 1e-9);
    EXPECT_NEAR(geom::distance(lanes[i].path.back(), {40 + 20 * std::cos(angles[i]), 20 * std::sin(angles[i])}), 0.0, 1e-9);
  }
}

TEST(ExpandForward, CycleTerminatesAtRevisit)
{
  const LaneGraph loop({seg(1, {{0, 0}, {10, 0}}, {2}), seg(2, {{10, 0}, {0, 0.5}}, {1})});
  const auto lanes = expand_forward(loop, 1, 1000.0);
  ASSERT_EQ(lanes.size(), 1u);
  EXPECT_EQ(lanes[0].source_ids, (std::vector<SegmentId>{1, 2}));
  EXPECT_THROW(expand_forward(loop, 99, 10.0), std::invalid_argument);
}

TEST(ExtractReferenceLanes, SingleLaneRoad)
{
  const LaneGraph g({seg(1, {{-100, 0}, {0, 0}}, {2}), seg(2, {{0, 0}, {100, 0}})});
  const auto lanes = extract_reference_lanes(g, straight_past({-5, 0.4}, 0.0), 3, 60.0);
  ASSERT_EQ(lanes.size(), 1u);
  EXPECT_TRUE(is_successor_chain(g, lanes[0].source_ids));
  EXPECT_NEAR(lanes[0].path.front().x, -5.0, 1e-9);
  EXPECT_NEAR(lanes[0].path.front().y, 0.0, 1e-9);
  EXPECT_NEAR(geom::arclength(lanes[0].path), 60.0, 1e-9);
}

TEST(ExtractReferenceLanes, TJunctionOnePerContinuation)
{
  const LaneGraph g = t_junction();
  const auto lanes = extract_reference_lanes(g, straight_past({48, 0}, 0.0), 3, 40.0);
  ASSERT_EQ(lanes.size(), 3u);
  std::set<SegmentId> ends;
  for (const auto & l : lanes) {
    EXPECT_EQ(l.source_ids.front(), 1);
    ends.insert(l.source_ids.back());
  }
  EXPECT_EQ(ends, (std::set<SegmentId>{2, 3, 4}));

  // Hand evaluation: lane start heading over the first 5 m; the turns go
  // 2 m east then 3 m north/south, so cos = 2 / sqrt(13).
  EXPECT_EQ(lanes[0].source_ids.back(), 2);
  EXPECT_NEAR(lanes[0].score, 1.0, 1e-9);
  EXPECT_NEAR(lanes[1].score, 2.0 / std::sqrt(13.0), 1e-9);
  EXPECT_NEAR(lanes[2].score, 2.0 / std::sqrt(13.0), 1e-9);
}

TEST(ExtractReferenceLanes, TopOneIsBestAligned)
{
  const LaneGraph g = t_junction();
  const auto one = extract_reference_lanes(g, straight_past({48, 0}, 0.0), 1, 40.0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].source_ids, (std::vector<SegmentId>{1, 2}));
}

TEST(ExtractReferenceLanes, OffMapIsEmpty)
{
  EXPECT_TRUE(extract_reference_lanes(t_junction(), straight_past({20, 40}, 0.0), 3, 40.0).empty());
  EXPECT_THROW(extract_reference_lanes(t_junction(), straight_past({0, 0}, 0.0), 0, 40.0), std::invalid_argument);
}

TEST(ExtractReferenceLanes, AdjacentLanesAreSeeded)
{
  std::vector<LaneSegment> s{seg(1, {{0, 0}, {100, 0}}), seg(2, {{0, 3.5}, {100, 3.5}})};
  s[0].left_neighbor = 2;
  s[1].right_neighbor = 1;
  const LaneGraph g(s);
  const auto lanes = extract_reference_lanes(g, straight_past({30, 0}, 0.0), 3, 40.0);
  ASSERT_EQ(lanes.size(), 2u);
  EXPECT_EQ(lanes[0].source_ids, std::vector<SegmentId>{1});
  EXPECT_EQ(lanes[1].source_ids, std::vector<SegmentId>{2});
  EXPECT_NEAR(lanes[1].score, 1.0 - 0.1 * 3.5, 1e-9);
}

// Properties over generated maps: chains, overlap, determinism and prefix
// stability in the number of lanes.
TEST(ExtractReferenceLanes, PropertiesOnGeneratedScenes)
{
  scenario::ScenarioConfig cfg;
  cfg.maneuver_mix = {0.2, 0.2, 0.2, 0.2, 0.2};
  std::size_t with_lanes = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto scene = scenario::generate_scene(cfg, scenario::scene_seed(77, i), i);
    for (const auto & agent : scene.agents) {
      const auto lanes = extract_reference_lanes(scene.map, agent.past, 3, 60.0);
      with_lanes += !lanes.empty();
      ASSERT_LE(lanes.size(), 3u);
      for (std::size_t a = 0; a < lanes.size(); ++a) {
        EXPECT_TRUE(is_successor_chain(scene.map, lanes[a].source_ids));
        EXPECT_GE(geom::arclength(lanes[a].path), ExtractionConfig{}.min_length - 1e-9);
        if (a > 0) {
          EXPECT_GE(lanes[a - 1].score + ExtractionConfig{}.score_tie, lanes[a].score);
        }
        for (std::size_t b = 0; b < a; ++b) EXPECT_LE(jaccard(lanes[a].source_ids, lanes[b].source_ids), 0.5);
      }
      const auto again = extract_reference_lanes(scene.map, agent.past, 3, 60.0);
      ASSERT_EQ(again.size(), lanes.size());
      for (std::size_t a = 0; a < lanes.size(); ++a) {
        EXPECT_EQ(again[a].source_ids, lanes[a].source_ids);
        EXPECT_EQ(again[a].path.points(), lanes[a].path.points());
      }
      for (std::size_t l = 1; l <= 3; ++l) {
        const auto fewer = extract_reference_lanes(scene.map, agent.past, l, 60.0);
        ASSERT_LE(fewer.size(), lanes.size());
        for (std::size_t a = 0; a < fewer.size(); ++a) EXPECT_EQ(fewer[a].source_ids, lanes[a].source_ids);
      }
    }
  }
  EXPECT_GT(with_lanes, 550u);
}

TEST(ResampleReference, StraightSpacing)
{
  const ReferenceLane lane{Polyline({{0, 0}, {90, 0}}), {1}, 0.0};
  // 30 m/s over 30 steps of 0.1 s travels the full 90 m.
  const auto pts = resample_reference(lane, 30, 30.0, 0.1);
  ASSERT_EQ(pts.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_NEAR(pts[i].x, 3.0 * (i + 1), 1e-9);
}

TEST(ResampleReference, ShortLaneIsClamped)
{
  const ReferenceLane lane{Polyline({{0, 0}, {12, 0}}), {1}, 0.0};
  const auto pts = resample_reference(lane, 30, 10.0, 0.1);
  EXPECT_EQ(pts.back(), (Point2{12, 0}));
  EXPECT_NEAR(pts[1].x - pts[0].x, 0.4, 1e-9);
  // Stationary agents still get the minimum travel distance.
  const auto still = resample_reference(ReferenceLane{Polyline({{0, 0}, {90, 0}}), {1}, 0.0}, 10, 0.0, 0.1);
  EXPECT_NEAR(still.back().x, 5.0, 1e-9);
}

TEST(ResampleReference, CurvedLaneMatchesGeomResample)
{
  std::vector<Point2> arc;
  for (int i = 0; i <= 60; ++i) {
    const double a = 1.2 * i / 60.0;
    arc.push_back({30.0 * std::sin(a), 30.0 * (1 - std::cos(a))});
  }
  const ReferenceLane lane{Polyline(arc), {1}, 0.0};
  const auto pts = resample_reference(lane, 30, 8.0, 0.1);
  // 24 m of travel, sampled at 31 equal stations including the start.
  const auto clipped = geom::truncate_by_arclength(lane.path, 0.0, 24.0);
  const auto ref = geom::resample(clipped, 31);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_NEAR(geom::distance(pts[i], ref.points()[i + 1]), 0.0, 1e-9);
}

}  // namespace
}  // namespace laneloss::lanegraph
