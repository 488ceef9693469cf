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

#include "laneloss/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace laneloss::metrics
{

std::vector<std::size_t> top_k(const std::vector<double> & scores, std::size_t k)
{
  if (k < 1 || k > scores.size()) {
    throw std::invalid_argument(
      "top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) + "]");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(k);
  return idx;
}

namespace
{

void check_prediction(const MultiModalPrediction & pred, std::size_t steps)
{
  if (pred.trajectories.empty() || pred.trajectories.size() != pred.scores.size()) {
    throw std::invalid_argument("prediction: need M >= 1 trajectories with one score each");
  }
  for (const auto & t : pred.trajectories) {
    if (t.size() != steps || steps == 0) {
      throw std::invalid_argument("prediction: trajectory length does not match ground truth");
    }
  }
}

}  // namespace

double min_ade(const MultiModalPrediction & pred, const geom::Trajectory & gt, std::size_t k)
{
  check_prediction(pred, gt.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m : top_k(pred.scores, k)) {
    double sum = 0.0;
    for (std::size_t t = 0; t < gt.size(); ++t) sum += geom::distance(pred.trajectories[m][t], gt[t]);
    best = std::min(best, sum / static_cast<double>(gt.size()));
  }
  return best;
}

double min_fde(const MultiModalPrediction & pred, const geom::Trajectory & gt, std::size_t k)
{
  check_prediction(pred, gt.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m : top_k(pred.scores, k)) {
    best = std::min(best, geom::distance(pred.trajectories[m].back(), gt.back()));
  }
  return best;
}

std::optional<double> min_lane_fde(
  const MultiModalPrediction & pred, const std::vector<geom::Polyline> & lanes, std::size_t k)
{
  if (pred.trajectories.empty() || pred.trajectories.size() != pred.scores.size()) {
    throw std::invalid_argument("min_lane_fde: need M >= 1 trajectories with one score each");
  }
  const auto modes = top_k(pred.scores, k);
  if (lanes.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto & lane : lanes) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : modes) {
      best = std::min(best, std::abs(geom::project(lane, pred.trajectories[m].back()).n));
    }
    sum += best;
  }
  return sum / static_cast<double>(lanes.size());
}

std::string to_string(Maneuver m)
{
  switch (m) {
    case Maneuver::kStraight: return "straight";
    case Maneuver::kLeftTurn: return "left_turn";
    case Maneuver::kRightTurn: return "right_turn";
    case Maneuver::kLeftLaneChange: return "left_lane_change";
    case Maneuver::kRightLaneChange: return "right_lane_change";
  }
  return "unknown";
}

Maneuver maneuver_from_string(const std::string & name)
{
  for (Maneuver m : kAllManeuvers) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown maneuver '" + name + "'");
}

bool is_turn(Maneuver m) { return m == Maneuver::kLeftTurn || m == Maneuver::kRightTurn; }

Maneuver classify_maneuver(
  const lanegraph::LaneGraph & map, const geom::Trajectory & past, const geom::Trajectory & future,
  const ClassifierConfig & config)
{
  if (future.size() < 2) throw std::invalid_argument("classify_maneuver: future needs >= 2 points");
  const std::size_t k =
    std::min<std::size_t>(static_cast<std::size_t>(std::max(config.heading_baseline, 1)), future.size() - 1);
  const double first = geom::heading_of(future.front(), future[k]);
  const double last = geom::heading_of(future[future.size() - 1 - k], future.back());
  const double dtheta = geom::wrap_angle(last - first);
  const double threshold = config.turn_threshold_deg * std::numbers::pi / 180.0;
  if (std::abs(dtheta) > threshold) {
    return dtheta > 0.0 ? Maneuver::kLeftTurn : Maneuver::kRightTurn;
  }

  lanegraph::ExtractionConfig ex;
  ex.heading_baseline = config.heading_baseline;
  const auto lanes = lanegraph::extract_reference_lanes(map, past, 1, config.lane_horizon, ex);
  if (lanes.empty()) return Maneuver::kStraight;
  const double d_lat = geom::project(lanes.front().path, future.back()).n;
  if (std::abs(d_lat) <= config.lane_change_threshold) return Maneuver::kStraight;

  const auto end_segments = lanegraph::nearby_segments(map, future.back(), 1e9);
  const auto & chain = lanes.front().source_ids;
  const bool left_chain =
    !end_segments.empty() && std::find(chain.begin(), chain.end(), end_segments.front()) == chain.end();
  if (!left_chain) return Maneuver::kStraight;
  return d_lat > 0.0 ? Maneuver::kLeftLaneChange : Maneuver::kRightLaneChange;
}

double ManeuverStats::fraction(Maneuver m) const
{
  return total == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(m)]) / static_cast<double>(total);
}

ManeuverStats maneuver_stats(std::span<const Maneuver> labels)
{
  ManeuverStats s;
  for (Maneuver m : labels) ++s.counts[static_cast<std::size_t>(m)];
  s.total = labels.size();
  return s;
}

ManeuverStats maneuver_stats(std::span<const ManeuverSample> samples, const ClassifierConfig & config)
{
  std::vector<Maneuver> labels;
  labels.reserve(samples.size());
  for (const auto & s : samples) labels.push_back(classify_maneuver(s.map, s.past, s.future, config));
  return maneuver_stats(labels);
}

nlohmann::json to_json(const ManeuverStats & stats)
{
  nlohmann::json j = nlohmann::json::object();
  for (Maneuver m : kAllManeuvers) {
    j[to_string(m)] = {
      {"count", stats.counts[static_cast<std::size_t>(m)]}, {"percent", 100.0 * stats.fraction(m)}};
  }
  j["total"] = stats.total;
  return j;
}

double MetricSummary::coverage() const
{
  const std::size_t n = count + missing;
  return n == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(n);
}

SubsetFilter turn_subset() { return {"turn", {Maneuver::kLeftTurn, Maneuver::kRightTurn}}; }

namespace
{

// Order-independent mean: sort, then Neumaier-compensated sum.
double stable_mean(std::vector<double> v)
{
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  double comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(v.size());
}

std::map<std::string, MetricSummary> summarize(
  std::span<const AgentReport> reports, const std::function<bool(const AgentReport &)> & keep)
{
  std::map<std::string, std::vector<double>> values;
  std::map<std::string, std::size_t> missing;
  for (const auto & r : reports) {
    if (!keep(r)) continue;
    for (const auto & [name, v] : r.values) {
      if (v) {
        values[name].push_back(*v);
      } else {
        ++missing[name];
        values[name];
      }
    }
  }
  std::map<std::string, MetricSummary> out;
  for (auto & [name, v] : values) {
    MetricSummary s;
    s.count = v.size();
    s.missing = missing[name];
    s.mean = stable_mean(std::move(v));
    out[name] = s;
  }
  return out;
}

nlohmann::json summary_json(const MetricSummary & s)
{
  return {{"mean", s.mean}, {"count", s.count}, {"missing", s.missing}, {"coverage", s.coverage()}};
}

}  // namespace

MetricTable aggregate(std::span<const AgentReport> reports, const std::vector<SubsetFilter> & subsets)
{
  MetricTable table;
  table.overall = summarize(reports, [](const AgentReport &) { return true; });
  for (const auto & f : subsets) {
    table.subsets[f.name] = summarize(reports, [&](const AgentReport & r) {
      return std::find(f.labels.begin(), f.labels.end(), r.maneuver) != f.labels.end();
    });
  }
  return table;
}

nlohmann::json to_json(const MetricTable & table)
{
  nlohmann::json j = nlohmann::json::object();
  for (const auto & [name, s] : table.overall) {
    j[name] = summary_json(s);
    j[name]["subsets"] = nlohmann::json::object();
  }
  for (const auto & [subset, metrics] : table.subsets) {
    for (const auto & [name, s] : metrics) {
      if (!j.contains(name)) j[name] = {{"subsets", nlohmann::json::object()}};
      j[name]["subsets"][subset] = summary_json(s);
    }
  }
  return j;
}

}  // namespace laneloss::metrics
