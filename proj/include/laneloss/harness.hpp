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

#ifndef LANELOSS__HARNESS_HPP_
#define LANELOSS__HARNESS_HPP_

#include "laneloss/autodiff.hpp"
#include "laneloss/losses.hpp"
#include "laneloss/metrics.hpp"
#include "laneloss/model.hpp"
#include "laneloss/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace laneloss::harness
{

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A non-finite loss during training (CLI exit code 3).
class DivergenceError : public std::runtime_error
{
public:
  DivergenceError(std::size_t epoch, std::size_t batch);
  std::size_t epoch;
  std::size_t batch;
};

struct TrainConfig
{
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::size_t lr_decay_epoch = 16;  ///< first epoch trained at the decayed rate
  double lr_decay = 0.1;
  bool use_lane_loss = true;
  std::size_t max_lanes = 3;        ///< L
  double lane_horizon = 60.0;       ///< reference lane extraction horizon [m]
  losses::LossWeights weights{};
  std::uint64_t seed = 0;           ///< model init and batch order
};

struct EvalConfig
{
  std::vector<std::size_t> ks{6, 1};  ///< minADE_k and minFDE_k for each k; minLaneFDE for the largest
};

struct RunConfig
{
  scenario::ScenarioConfig scenario{};
  model::ModelConfig model{};
  TrainConfig train{};
  EvalConfig eval{};
  std::size_t train_scenes = 5000;
  std::size_t test_scenes = 1000;
  std::vector<std::uint64_t> ablation_seeds{0};
  std::string out_dir = ".";
};

/// Desk-scale defaults (d = 32, k = M = 6, L = 3, three agents per scene).
RunConfig default_run_config();

nlohmann::json to_json(const RunConfig & c);
/// Applies the keys present in `j` on top of `base`. Unknown keys and invalid
/// values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json & j, RunConfig base = default_run_config());
RunConfig load_run_config(const std::string & path);

/// Model inputs and per-agent training targets for one scene.
struct PreparedSample
{
  model::PreparedScene scene;
  std::vector<losses::AgentTargets> targets;                 ///< agent frame
  std::vector<std::vector<geom::Polyline>> reference_lanes;  ///< world frame, per agent
  std::vector<geom::Trajectory> futures;                     ///< world frame, per agent
  std::size_t target = 0;
  metrics::Maneuver maneuver = metrics::Maneuver::kStraight;
  std::uint64_t scene_id = 0;
};

PreparedSample prepare_sample(const scenario::Scene & s, const model::ModelConfig & mc, const TrainConfig & tc);
std::vector<PreparedSample> prepare_samples(
  const std::vector<scenario::Scene> & scenes, const model::ModelConfig & mc, const TrainConfig & tc);

struct LossBreakdown
{
  double total = 0.0;
  double score = 0.0;
  double pred = 0.0;
  double prop = 0.0;
};

/// Builds the total loss of one scene on `tape` (agent-averaged terms).
struct SceneLoss
{
  ad::Var total;
  LossBreakdown parts;
};
SceneLoss scene_loss(ad::Tape & tape, const model::Model & m, const PreparedSample & s, const TrainConfig & tc);

struct EpochLog
{
  std::size_t epoch = 0;
  double lr = 0.0;
  LossBreakdown mean{};
  std::size_t batches = 0;
};
nlohmann::json to_json(const EpochLog & log);

/// Learning rate used in `epoch` (0-based).
double learning_rate(const TrainConfig & tc, std::size_t epoch);

struct TrainState
{
  std::size_t epoch = 0;  ///< completed epochs
  ad::AdamState adam{};
};

/**
 * Trains `m` from `state.epoch` up to tc.epochs. Batches are drawn from a
 * permutation seeded by (tc.seed, epoch), so a resumed run matches an
 * uninterrupted one. `on_epoch` is called after every epoch. Throws
 * DivergenceError on a non-finite loss.
 */
void train(
  model::Model & m, TrainState & state, const std::vector<PreparedSample> & samples, const TrainConfig & tc,
  const std::function<void(const EpochLog &, const TrainState &)> & on_epoch = {});

nlohmann::json checkpoint_to_json(const model::Model & m, const TrainState & state, const TrainConfig & tc);
struct Checkpoint
{
  model::Model model;
  TrainState state;
  TrainConfig train;
};
Checkpoint checkpoint_from_json(const nlohmann::json & j);
void save_checkpoint(const std::string & path, const model::Model & m, const TrainState & state, const TrainConfig & tc);
Checkpoint load_checkpoint(const std::string & path);

/// Forward pass of one prepared scene with predictions in world coordinates.
std::vector<metrics::MultiModalPrediction> predict(const model::Model & m, const PreparedSample & s);

/// Per-target-agent metric values for every sample.
std::vector<metrics::AgentReport> evaluate_reports(
  const model::Model & m, const std::vector<PreparedSample> & samples, const EvalConfig & ec);

struct EvalReport
{
  metrics::MetricTable table;
  std::vector<std::string> columns;  ///< metric names in display order
};
EvalReport evaluate(const model::Model & m, const std::vector<PreparedSample> & samples, const EvalConfig & ec);
nlohmann::json to_json(const EvalReport & r);
/// Fixed-width text table: one row for the full set, one for the turn subset.
std::string format_report(const EvalReport & r);

/// One ablation variant.
struct Variant
{
  std::string name;
  bool use_tpa = false;
  bool use_lane_loss = false;
};
/// Baseline, + TPA, + Lane Loss, + Lane Loss + TPA.
std::vector<Variant> ablation_variants();

struct AblationRow
{
  Variant variant;
  std::uint64_t seed = 0;
  EvalReport report;
  std::vector<EpochLog> log;
};

/// Dataset and training seeds used for one ablation seed.
std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream);

/**
 * Trains and evaluates `variants` for one seed. All variants share the
 * datasets, the model seed and the batch order; only the TPA and Lane Loss
 * switches differ.
 */
std::vector<AblationRow> run_ablation(
  const RunConfig & config, std::uint64_t seed, const std::vector<Variant> & variants,
  const std::function<void(const std::string &)> & progress = {});

nlohmann::json ablation_to_json(const std::vector<AblationRow> & rows);
std::string format_ablation(const std::vector<AblationRow> & rows);

/// Deterministic SVG of one scene: lanes gray, past yellow, predictions
/// green, ground truth red.
std::string render_svg(
  const scenario::Scene & s, const std::vector<metrics::MultiModalPrediction> & predictions);

}  // namespace laneloss::harness

#endif  // LANELOSS__HARNESS_HPP_
