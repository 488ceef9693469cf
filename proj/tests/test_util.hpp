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

#ifndef LANELOSS_TESTS__TEST_UTIL_HPP_
#define LANELOSS_TESTS__TEST_UTIL_HPP_

#include "laneloss/autodiff.hpp"
#include "laneloss/geom.hpp"
#include "laneloss/metrics.hpp"
#include "oracles.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace laneloss::test
{

inline oracle::P to_oracle(geom::Point2 p) { return {p.x, p.y}; }
inline geom::Point2 from_oracle(oracle::P p) { return {p.x, p.y}; }

inline oracle::Path to_oracle(const std::vector<geom::Point2> & pts)
{
  oracle::Path out;
  for (const auto & p : pts) out.push_back(to_oracle(p));
  return out;
}

inline geom::Trajectory from_oracle(const oracle::Traj & t)
{
  geom::Trajectory out;
  for (const auto & p : t) out.push_back(from_oracle(p));
  return out;
}

/// Random polyline with `vertices` points, turning by up to `max_turn` per vertex.
inline std::vector<geom::Point2> random_polyline(
  std::mt19937_64 & rng, std::size_t vertices, double max_turn = 1.2, double min_len = 0.5, double max_len = 15.0)
{
  std::uniform_real_distribution<double> len(min_len, max_len);
  std::uniform_real_distribution<double> turn(-max_turn, max_turn);
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::vector<geom::Point2> pts{{pos(rng), pos(rng)}};
  double h = ang(rng);
  for (std::size_t i = 1; i < vertices; ++i) {
    const double l = len(rng);
    pts.push_back({pts.back().x + l * std::cos(h), pts.back().y + l * std::sin(h)});
    h += turn(rng);
  }
  return pts;
}

/// Random rigid transform with rotation in (-pi, pi] and translation within 100 m.
inline geom::RigidTransform random_transform(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> pos(-100.0, 100.0);
  return {ang(rng), {pos(rng), pos(rng)}};
}

inline geom::Trajectory apply(const geom::RigidTransform & tf, const geom::Trajectory & t)
{
  geom::Trajectory out;
  for (const auto & p : t) out.push_back(tf.apply(p));
  return out;
}

/// M x T x 2 tensor from per-mode tracks.
inline ad::Tensor stack(const std::vector<oracle::Traj> & modes)
{
  const std::size_t steps = modes.front().size();
  ad::Tensor t(ad::Shape{modes.size(), steps, 2});
  for (std::size_t m = 0; m < modes.size(); ++m) {
    for (std::size_t s = 0; s < steps; ++s) {
      t[(m * steps + s) * 2] = modes[m][s].x;
      t[(m * steps + s) * 2 + 1] = modes[m][s].y;
    }
  }
  return t;
}

inline std::vector<oracle::Traj> unstack(const std::vector<double> & flat, std::size_t modes, std::size_t steps)
{
  std::vector<oracle::Traj> out(modes, oracle::Traj(steps));
  for (std::size_t m = 0; m < modes; ++m) {
    for (std::size_t s = 0; s < steps; ++s) out[m][s] = {flat[(m * steps + s) * 2], flat[(m * steps + s) * 2 + 1]};
  }
  return out;
}

inline metrics::MultiModalPrediction to_prediction(const std::vector<oracle::Traj> & modes, const std::vector<double> & scores)
{
  metrics::MultiModalPrediction p;
  for (const auto & m : modes) p.trajectories.push_back(from_oracle(m));
  p.scores = scores;
  return p;
}

inline std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace laneloss::test

#endif  // LANELOSS_TESTS__TEST_UTIL_HPP_
