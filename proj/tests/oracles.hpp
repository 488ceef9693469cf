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

// Test-side reference implementations. Nothing here calls into the library's
// geometry, loss or metric code: every value is recomputed from the
// definitions with plain loops so it can serve as an independent oracle.

#ifndef LANELOSS_TESTS__ORACLES_HPP_
#define LANELOSS_TESTS__ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace laneloss::oracle
{

struct P
{
  double x = 0.0;
  double y = 0.0;
};

using Path = std::vector<P>;
using Traj = std::vector<P>;

inline double dist(P a, P b) { return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)); }

/// Distance from q to segment ab using the triangle height where the foot
/// falls inside the segment and the nearer endpoint otherwise.
inline double segment_distance(P q, P a, P b)
{
  const double ab = dist(a, b);
  const double ax = (q.x - a.x) * (b.x - a.x) + (q.y - a.y) * (b.y - a.y);
  const double bx = (q.x - b.x) * (a.x - b.x) + (q.y - b.y) * (a.y - b.y);
  if (ax <= 0.0) return dist(q, a);
  if (bx <= 0.0) return dist(q, b);
  const double twice_area = std::abs((b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x));
  return twice_area / ab;
}

/// Exact unsigned distance from q to a polyline: minimum over its segments.
inline double path_distance(const Path & path, P q)
{
  if (path.size() == 1) return dist(path.front(), q);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) best = std::min(best, segment_distance(q, path[i], path[i + 1]));
  return best;
}

/// Arc-length-uniform samples of a polyline, `count` of them plus every vertex.
inline std::vector<P> dense_samples(const Path & path, std::size_t count)
{
  std::vector<double> cum(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) cum[i] = cum[i - 1] + dist(path[i - 1], path[i]);
  const double total = cum.back();
  std::vector<P> out(path.begin(), path.end());
  std::size_t seg = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const double s = total * static_cast<double>(j) / static_cast<double>(count - 1);
    while (seg + 2 < path.size() && cum[seg + 1] < s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back({path[seg].x + t * (path[seg + 1].x - path[seg].x), path[seg].y + t * (path[seg + 1].y - path[seg].y)});
  }
  return out;
}

inline double nearest_sample_distance(const std::vector<P> & samples, P q)
{
  double best = std::numeric_limits<double>::infinity();
  for (const P & s : samples) best = std::min(best, (s.x - q.x) * (s.x - q.x) + (s.y - q.y) * (s.y - q.y));
  return std::sqrt(best);
}

inline double smooth_l1(double d, double beta = 1.0)
{
  const double a = std::abs(d);
  return a < beta ? 0.5 * a * a / beta : a - 0.5 * beta;
}

/// Mean smooth L1 over every coordinate of two equally long tracks.
inline double mean_smooth_l1(const Traj & a, const Traj & b, double beta = 1.0)
{
  double sum = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) sum += smooth_l1(a[t].x - b[t].x, beta) + smooth_l1(a[t].y - b[t].y, beta);
  return sum / static_cast<double>(2 * a.size());
}

/// Ground-truth winner: smallest final-point distance, lowest index on ties.
inline std::size_t wta_winner(const std::vector<Traj> & modes, const Traj & gt)
{
  std::size_t best = 0;
  for (std::size_t m = 1; m < modes.size(); ++m) {
    if (dist(modes[m].back(), gt.back()) < dist(modes[best].back(), gt.back())) best = m;
  }
  return best;
}

inline std::pair<double, std::size_t> wta_loss(const std::vector<Traj> & modes, const Traj & gt)
{
  const std::size_t w = wta_winner(modes, gt);
  return {mean_smooth_l1(modes[w], gt), w};
}

/// Lane term averaged over lanes; each lane is served by the non-winner whose
/// final point lies closest to that lane's polyline.
inline double lane_loss(const std::vector<Traj> & modes, const std::vector<Traj> & lanes, std::size_t winner)
{
  if (modes.size() < 2) return 0.0;
  double sum = 0.0;
  for (const Traj & lane : lanes) {
    double best_n = std::numeric_limits<double>::infinity();
    std::size_t best_m = 0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (m == winner) continue;
      const double n = path_distance(lane, modes[m].back());
      if (n < best_n) {
        best_n = n;
        best_m = m;
      }
    }
    sum += mean_smooth_l1(modes[best_m], lane);
  }
  return sum / static_cast<double>(lanes.size());
}

inline double score_loss(const std::vector<double> & p, std::size_t winner, double eps)
{
  double sum = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (m != winner) sum += std::max(0.0, p[m] + eps - p[winner]);
  }
  return sum;
}

/// Whether modality m is among the k highest scores (ties favour lower index).
inline bool in_top_k(const std::vector<double> & scores, std::size_t m, std::size_t k)
{
  std::size_t rank = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > scores[m] || (scores[j] == scores[m] && j < m)) ++rank;
  }
  return rank < k;
}

inline double min_ade(const std::vector<Traj> & modes, const std::vector<double> & scores, const Traj & gt, std::size_t k)
{
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (!in_top_k(scores, m, k)) continue;
    double sum = 0.0;
    for (std::size_t t = 0; t < gt.size(); ++t) sum += dist(modes[m][t], gt[t]);
    best = std::min(best, sum / static_cast<double>(gt.size()));
  }
  return best;
}

inline double min_fde(const std::vector<Traj> & modes, const std::vector<double> & scores, const Traj & gt, std::size_t k)
{
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (in_top_k(scores, m, k)) best = std::min(best, dist(modes[m].back(), gt.back()));
  }
  return best;
}

inline double min_lane_fde(
  const std::vector<Traj> & modes, const std::vector<double> & scores, const std::vector<Path> & lanes, std::size_t k)
{
  double sum = 0.0;
  for (const Path & lane : lanes) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (in_top_k(scores, m, k)) best = std::min(best, path_distance(lane, modes[m].back()));
    }
    sum += best;
  }
  return sum / static_cast<double>(lanes.size());
}

/// Central difference of f at x along coordinate i.
inline double central_difference(
  const std::function<double(const std::vector<double> &)> & f, std::vector<double> x, std::size_t i, double h)
{
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor): relative error with an absolute floor for
/// near-zero derivatives.
inline double relative_error(double a, double b, double floor = 1e-6)
{
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/**
 * Central difference of a one-dimensional slice g(step) = f(x + step e_i)
 * around step 0, or nothing when the slice has a kink near 0.
 *
 * Two tests, both at h and h/2. Central differences must agree: this fails
 * when a kink lies between h/2 and h. The gap between forward and backward
 * differences must halve with h on a smooth piece, while across a kink closer
 * than h/2 it stays at the jump in slope.
 */
inline std::optional<double> kink_free_derivative(const std::function<double(double)> & g, double h)
{
  const double f0 = g(0.0);
  const double fp1 = g(h), fm1 = g(-h), fp2 = g(h / 2.0), fm2 = g(-h / 2.0);
  const double d1 = (fp1 - fm1) / (2.0 * h);
  const double d2 = (fp2 - fm2) / h;
  const double gap1 = (fp1 - f0) / h - (f0 - fm1) / h;
  const double gap2 = (fp2 - f0) / (h / 2.0) - (f0 - fm2) / (h / 2.0);
  const double scale = std::max({std::abs(d1), std::abs(d2), 1e-3});
  if (std::abs(d1 - d2) > 1e-4 * scale || std::abs(gap2 - gap1 / 2.0) > 1e-5 * scale) return std::nullopt;
  return d2;
}

inline Traj random_traj(std::mt19937_64 & rng, std::size_t steps, double spread)
{
  std::normal_distribution<double> step(0.0, spread);
  Traj t(steps);
  P cur{step(rng), step(rng)};
  for (auto & p : t) {
    cur.x += 1.0 + step(rng);
    cur.y += step(rng);
    p = cur;
  }
  return t;
}

}  // namespace laneloss::oracle

#endif  // LANELOSS_TESTS__ORACLES_HPP_
