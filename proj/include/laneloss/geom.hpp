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

#ifndef LANELOSS__GEOM_HPP_
#define LANELOSS__GEOM_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace laneloss::geom
{

struct Point2
{
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point2 &, const Point2 &) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Time-indexed point sequence of one agent.
using Trajectory = std::vector<Point2>;

/// Frenet coordinates relative to a polyline. `n` is positive on the left of
/// the direction of travel.
struct FrenetCoord
{
  double s = 0.0;
  double n = 0.0;
};

/// Rigid 2D transform: rotation by `theta` followed by translation.
struct RigidTransform
{
  double theta = 0.0;
  Point2 translation{};

  Point2 apply(Point2 p) const;
  /// The transform that maps world coordinates into the frame whose origin is
  /// `origin` and whose x-axis points along `heading`.
  static RigidTransform to_local(Point2 origin, double heading);
  RigidTransform inverse() const;
};

/**
 * @brief Piecewise-linear curve with a cached cumulative arc-length table.
 *
 * Consecutive duplicate points are dropped on construction. Construction
 * throws std::invalid_argument when fewer than two distinct points remain or
 * when any coordinate is not finite. Instances are immutable.
 */
class Polyline
{
public:
  explicit Polyline(std::vector<Point2> points);

  const std::vector<Point2> & points() const { return points_; }
  const std::vector<double> & cumulative_arclength() const { return cumulative_; }
  std::size_t size() const { return points_.size(); }
  Point2 front() const { return points_.front(); }
  Point2 back() const { return points_.back(); }

  /// Point at arc length `s`, clamped to [0, arclength()].
  Point2 point_at(double s) const;
  /// Unit tangent heading (radians) of the segment containing `s`.
  double heading_at(double s) const;

private:
  std::size_t segment_index(double s) const;

  std::vector<Point2> points_;
  std::vector<double> cumulative_;
};

double arclength(const Polyline & p);

/// Closest point on `p` to `q`. Ties between segments resolve to the smaller s.
FrenetCoord project(const Polyline & p, Point2 q);

/// `count` points equally spaced in arc length; endpoints coincide with the
/// input's. Throws std::invalid_argument when count < 2.
Polyline resample(const Polyline & p, std::size_t count);

/// Sub-polyline covering [s0, s1] with interpolated endpoints. Throws
/// std::invalid_argument unless 0 <= s0 < s1 <= arclength(p) (up to 1e-9).
Polyline truncate_by_arclength(const Polyline & p, double s0, double s1);

Polyline transformed(const Polyline & p, const RigidTransform & tf);

/// Heading of the vector from `from` to `to`.
inline double heading_of(Point2 from, Point2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace laneloss::geom

#endif  // LANELOSS__GEOM_HPP_
