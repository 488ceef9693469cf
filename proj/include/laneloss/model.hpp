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

#ifndef LANELOSS__MODEL_HPP_
#define LANELOSS__MODEL_HPP_

#include "laneloss/autodiff.hpp"
#include "laneloss/geom.hpp"
#include "laneloss/losses.hpp"
#include "laneloss/metrics.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

/**
 * Two-stage multimodal predictor.
 *
 * Dataflow: feature extractor (temporal conv encoder over each agent's past,
 * shared MLP over nearby lane centerlines, agent-to-lane attention) ->
 * trajectory proposal attention (proposal header, weight-shared proposal
 * encoder, multi-head attention with the agent feature as query over the
 * proposal embeddings) -> interaction stage (agent-to-lane and agent-to-agent
 * attention) -> prediction header (trajectories and raw scores).
 *
 * Every agent is processed in its own frame: origin at its current position,
 * x-axis along its current heading. Trajectories are offsets from the current
 * position in that frame.
 */
namespace laneloss::model
{

struct ModelConfig
{
  std::size_t d = 64;                ///< feature width
  std::size_t k = 6;                 ///< proposal count
  std::size_t modes = 6;             ///< output modality count M
  std::size_t heads = 4;
  std::size_t t_o = 20;
  std::size_t t_f = 30;
  std::size_t proposal_width = 128;  ///< proposal embedding width
  std::size_t norm_groups = 1;
  std::size_t lane_points = 10;      ///< samples per lane centerline fed to the lane encoder
  double lane_radius = 40.0;         ///< agent-to-lane attention radius [m]
  double agent_radius = 50.0;        ///< agent-to-agent attention radius [m]
  double output_scale = 10.0;        ///< header outputs are in units of this many meters
  bool use_tpa = true;               ///< two-stage mode; off feeds h_FE straight to interaction
  bool zero_init_headers = false;    ///< zero the regression layer of both headers

  void validate() const;
};

nlohmann::json to_json(const ModelConfig & c);
ModelConfig model_config_from_json(const nlohmann::json & j, ModelConfig base = {});

/// Constant per-scene inputs, all expressed in each agent's own frame.
struct PreparedScene
{
  std::size_t num_agents = 0;
  std::vector<geom::Point2> positions;   ///< world current position per agent
  std::vector<double> headings;          ///< world heading per agent
  ad::Tensor past;                       ///< N x t_o x 4: local xy / 10 and per-step deltas
  ad::Tensor lane_rows;                  ///< P x (2 * lane_points), one row per (agent, lane)
  std::vector<std::size_t> lane_owner;   ///< P, agent index of each lane row
  std::vector<std::size_t> lane_ids;     ///< P, index into the scene's lane list
  ad::Tensor neighbor_rows;              ///< Q x 4: relative position / 10, cos/sin relative heading
  std::vector<std::size_t> neighbor_src; ///< Q, the other agent
  std::vector<std::size_t> neighbor_owner; ///< Q, the querying agent

  geom::RigidTransform to_local(std::size_t agent) const;
  geom::RigidTransform to_world(std::size_t agent) const;
};

/// Builds model inputs from world-frame past tracks (t_o points each) and
/// lane centerlines. Throws std::invalid_argument on length mismatch.
PreparedScene prepare_scene(
  const ModelConfig & config, const std::vector<geom::Trajectory> & pasts,
  const std::vector<geom::Polyline> & lanes, double dt = 0.1);

struct SceneFeatures
{
  ad::Var h_fe;           ///< N x d
  ad::Var lane_features;  ///< P x d (invalid when P = 0)
};

struct HeaderOutput
{
  ad::Var trajectories;  ///< (N * count) x t_f x 2
  ad::Var scores;        ///< N x count, invalid for the proposal header
};

struct ForwardResult
{
  ad::Var proposals;     ///< (N * k) x t_f x 2, invalid when TPA is off
  ad::Var trajectories;  ///< (N * M) x t_f x 2
  ad::Var scores;        ///< N x M
};

class Model
{
public:
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig & config() const { return config_; }
  ad::ParameterStore & params() { return params_; }
  const ad::ParameterStore & params() const { return params_; }

  SceneFeatures feature_extractor(ad::Tape & tape, const PreparedScene & scene) const;
  /// k proposals per agent, offsets from the current position.
  ad::Var proposal_header(ad::Tape & tape, const ad::Var & h_fe) const;
  /// One proposal_width embedding per proposal: (N * k) x proposal_width.
  ad::Var proposal_encoder(ad::Tape & tape, const ad::Var & proposals) const;
  /// h_FE concatenated with the attention read-out over that agent's
  /// proposal embeddings: N x 2d.
  ad::Var proposal_attention(ad::Tape & tape, const ad::Var & h_fe, const ad::Var & g) const;
  /// Same attention as proposal_attention, also returning the per-head
  /// attention weights (heads x N x N*k, zero outside each agent's block).
  ad::Var proposal_attention(
    ad::Tape & tape, const ad::Var & h_fe, const ad::Var & g, std::vector<ad::Tensor> * weights) const;
  ad::Var interaction_stage(
    ad::Tape & tape, const ad::Var & h, const SceneFeatures & features, const PreparedScene & scene) const;
  HeaderOutput prediction_header(ad::Tape & tape, const ad::Var & refined) const;
  ForwardResult forward(ad::Tape & tape, const PreparedScene & scene) const;

private:
  struct Linear
  {
    ad::ParamId w;
    ad::ParamId b;
  };
  struct Norm
  {
    ad::ParamId gamma;
    ad::ParamId beta;
  };
  struct Attention
  {
    ad::ParamId wq, wk, wv, wo;
  };
  struct Header
  {
    Linear l1, l2, out;
    Norm n1, n2;
    std::size_t count;
    bool scored;
    Linear score_end, score_hidden, score_out;
  };

  Linear make_linear(
    const std::string & name, std::size_t in, std::size_t out, double scale = 1.0, bool bias = true);
  Norm make_norm(const std::string & name, std::size_t width);
  Attention make_attention(const std::string & name, std::size_t dq, std::size_t dkv);
  Header make_header(const std::string & name, std::size_t count, bool scored);

  ad::Var linear(ad::Tape & tape, const Linear & l, const ad::Var & x) const;
  ad::Var norm(ad::Tape & tape, const Norm & n, const ad::Var & x) const;
  ad::Var attend(
    ad::Tape & tape, const Attention & a, const ad::Var & queries, const ad::Var & keys,
    const std::vector<std::size_t> & owner, std::vector<ad::Tensor> * weights = nullptr) const;
  HeaderOutput run_header(ad::Tape & tape, const Header & h, const ad::Var & x) const;

  ModelConfig config_;
  ad::ParameterStore params_;
  std::uint64_t seed_;
  std::uint64_t init_counter_ = 0;

  Linear actor_conv1_, actor_conv2_, actor_out_;
  Norm actor_norm1_, actor_norm2_;
  Linear lane_in_, lane_out_;
  Norm lane_norm_;
  Attention fuse_attention_;
  Norm fuse_norm_;
  Header proposal_header_;
  Linear pe_conv1_, pe_conv2_, pe_out_;
  Norm pe_norm_;
  Attention proposal_attention_;
  Linear tpa_projection_;
  Norm tpa_norm_;
  Attention a2l_attention_;
  Attention a2a_attention_;
  Linear a2a_relation_;
  Linear ffn1_, ffn2_;
  Header prediction_header_;
};

/// Per-agent views of a forward result for the loss functions.
ad::Var agent_trajectories(const ad::Var & stacked, std::size_t agent, std::size_t count);
ad::Var agent_scores(const ad::Var & scores, std::size_t agent);

/// Agent `agent`'s predictions mapped back to world coordinates.
metrics::MultiModalPrediction to_world(
  const ForwardResult & result, const PreparedScene & scene, std::size_t agent, std::size_t modes);

/// Proposals of one agent in world coordinates (scores all zero).
metrics::MultiModalPrediction proposals_to_world(
  const ForwardResult & result, const PreparedScene & scene, std::size_t agent, std::size_t k);

}  // namespace laneloss::model

#endif  // LANELOSS__MODEL_HPP_
