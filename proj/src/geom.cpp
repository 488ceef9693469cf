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

#include "laneloss/geom.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace laneloss::geom
{

Point2 RigidTransform::apply(Point2 p) const
{
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y};
}

RigidTransform RigidTransform::to_local(Point2 origin, double heading)
{
  RigidTransform tf;
  tf.theta = -heading;
  const double c = std::cos(tf.theta);
  const double s = std::sin(tf.theta);
  tf.translation = {-(c * origin.x - s * origin.y), -(s * origin.x + c * origin.y)};
  return tf;
}

RigidTransform RigidTransform::inverse() const
{
  RigidTransform inv;
  inv.theta = -theta;
  const double c = std::cos(inv.theta);
  const double s = std::sin(inv.theta);
  inv.translation = {
    -(c * translation.x - s * translation.y), -(s * translation.x + c * translation.y)};
  return inv;
}

Polyline::Polyline(std::vector<Point2> points)
{
  points_.reserve(points.size());
  for (const auto & p : points) {
    if (!is_finite(p)) {
      throw std::invalid_argument("Polyline: non-finite coordinate");
    }
    if (points_.empty() || distance(points_.back(), p) > 0.0) {
      points_.push_back(p);
    }
  }
  if (points_.size() < 2) {
    throw std::invalid_argument(
      "Polyline: need at least 2 distinct points, got " + std::to_string(points_.size()));
  }
  cumulative_.resize(points_.size());
  cumulative_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    cumulative_[i] = cumulative_[i - 1] + distance(points_[i - 1], points_[i]);
  }
}

std::size_t Polyline::segment_index(double s) const
{
  // Last segment whose start is <= s.
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t idx = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(idx, points_.size() - 2);
}

Point2 Polyline::point_at(double s) const
{
  if (s <= 0.0) return points_.front();
  if (s >= cumulative_.back()) return points_.back();
  const std::size_t i = segment_index(s);
  const double len = cumulative_[i + 1] - cumulative_[i];
  const double t = std::clamp((s - cumulative_[i]) / len, 0.0, 1.0);
  return points_[i] + t * (points_[i + 1] - points_[i]);
}

double Polyline::heading_at(double s) const
{
  const std::size_t i = segment_index(std::clamp(s, 0.0, cumulative_.back()));
  return heading_of(points_[i], points_[i + 1]);
}

double arclength(const Polyline & p) { return p.cumulative_arclength().back(); }

FrenetCoord project(const Polyline & p, Point2 q)
{
  const auto & pts = p.points();
  const auto & cum = p.cumulative_arclength();
  double best_d2 = std::numeric_limits<double>::infinity();
  FrenetCoord best;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Point2 a = pts[i];
    const Point2 dir = pts[i + 1] - a;
    const double len2 = dot(dir, dir);
    const double t = std::clamp(dot(q - a, dir) / len2, 0.0, 1.0);
    const Point2 closest = a + t * dir;
    const Point2 off = q - closest;
    const double d2 = dot(off, off);
    if (d2 < best_d2) {
      best_d2 = d2;
      const double d = std::sqrt(d2);
      best.s = cum[i] + t * (cum[i + 1] - cum[i]);
      best.n = cross(dir, off) < 0.0 ? -d : d;
    }
  }
  return best;
}

Polyline resample(const Polyline & p, std::size_t count)
{
  if (count < 2) {
    throw std::invalid_argument("resample: count must be >= 2");
  }
  const double total = arclength(p);
  std::vector<Point2> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (i == 0) {
      out.push_back(p.front());
    } else if (i + 1 == count) {
      out.push_back(p.back());
    } else {
      out.push_back(p.point_at(total * static_cast<double>(i) / static_cast<double>(count - 1)));
    }
  }
  return Polyline(std::move(out));
}

Polyline truncate_by_arclength(const Polyline & p, double s0, double s1)
{
  constexpr double kTol = 1e-9;
  const double total = arclength(p);
  if (!(s0 < s1) || s0 < -kTol || s1 > total + kTol) {
    throw std::invalid_argument(
      "truncate_by_arclength: need 0 <= s0 < s1 <= " + std::to_string(total) + ", got [" +
      std::to_string(s0) + ", " + std::to_string(s1) + "]");
  }
  s0 = std::clamp(s0, 0.0, total);
  s1 = std::clamp(s1, 0.0, total);
  const auto & pts = p.points();
  const auto & cum = p.cumulative_arclength();
  std::vector<Point2> out;
  out.push_back(p.point_at(s0));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (cum[i] > s0 && cum[i] < s1) out.push_back(pts[i]);
  }
  out.push_back(p.point_at(s1));
  return Polyline(std::move(out));
}

Polyline transformed(const Polyline & p, const RigidTransform & tf)
{
  std::vector<Point2> out;
  out.reserve(p.size());
  for (const auto & q : p.points()) out.push_back(tf.apply(q));
  return Polyline(std::move(out));
}

double wrap_angle(double a)
{
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, kTwoPi);
  if (a <= 0.0) a += kTwoPi;
  return a - std::numbers::pi;
}

}  // namespace laneloss::geom
