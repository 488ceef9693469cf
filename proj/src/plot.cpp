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

#include "laneloss/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace laneloss::harness
{

namespace
{

constexpr double kMargin = 25.0;  // [m] around the target's tracks
constexpr double kPixelsPerMeter = 8.0;

struct Box
{
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void add(const geom::Point2 & p)
  {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
};

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

class Canvas
{
public:
  explicit Canvas(const Box & box) : box_(box) {}

  void polyline(const std::vector<geom::Point2> & pts, const char * color, double width, double opacity = 1.0)
  {
    os_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << num(width)
        << "\" stroke-opacity=\"" << num(opacity) << "\" stroke-linecap=\"round\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os_ << (i ? " " : "") << num(x(pts[i])) << ',' << num(y(pts[i]));
    }
    os_ << "\"/>\n";
  }

  void dot(const geom::Point2 & p, const char * color, double radius)
  {
    os_ << "<circle cx=\"" << num(x(p)) << "\" cy=\"" << num(y(p)) << "\" r=\"" << num(radius) << "\" fill=\""
        << color << "\"/>\n";
  }

  std::string finish() const
  {
    const double w = (box_.max_x - box_.min_x) * kPixelsPerMeter;
    const double h = (box_.max_y - box_.min_y) * kPixelsPerMeter;
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
        << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << os_.str() << "</svg>\n";
    return out.str();
  }

private:
  double x(const geom::Point2 & p) const { return (p.x - box_.min_x) * kPixelsPerMeter; }
  // SVG y grows downwards.
  double y(const geom::Point2 & p) const { return (box_.max_y - p.y) * kPixelsPerMeter; }

  Box box_;
  std::ostringstream os_;
};

}  // namespace

std::string render_svg(const scenario::Scene & s, const std::vector<metrics::MultiModalPrediction> & predictions)
{
  Box box;
  const auto & target = s.agents.at(s.target);
  for (const auto & p : target.past) box.add(p);
  for (const auto & p : target.future) box.add(p);
  if (s.target < predictions.size()) {
    for (const auto & t : predictions[s.target].trajectories) {
      for (const auto & p : t) box.add(p);
    }
  }
  box.min_x -= kMargin;
  box.min_y -= kMargin;
  box.max_x += kMargin;
  box.max_y += kMargin;

  Canvas c(box);
  for (const auto & [id, seg] : s.map.segments()) c.polyline(seg.centerline.points(), "#9e9e9e", 10.0, 0.6);
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const double width = i == s.target ? 3.0 : 1.5;
    c.polyline(s.agents[i].past, "#e6b800", width);
    c.dot(s.agents[i].past.back(), "#e6b800", width + 1.0);
    if (i == s.target) {
      c.polyline(s.agents[i].future, "#d62728", width);
      c.dot(s.agents[i].future.back(), "#d62728", width + 1.0);
    }
  }
  if (s.target < predictions.size()) {
    for (const auto & t : predictions[s.target].trajectories) {
      std::vector<geom::Point2> path{s.agents[s.target].past.back()};
      path.insert(path.end(), t.begin(), t.end());
      c.polyline(path, "#2ca02c", 2.0, 0.9);
      c.dot(t.back(), "#2ca02c", 3.0);
    }
  }
  return c.finish();
}

}  // namespace laneloss::harness
