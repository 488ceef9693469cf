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

#include "laneloss/model.hpp"

#include "laneloss/lanegraph.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace laneloss::model
{

namespace
{

constexpr double kPositionScale = 0.1;  // meters -> network units
constexpr double kMaskedLogit = -1e30;

// Temporal conv geometry: kernel 3 where the sequence allows it, stride 2 on
// sequences long enough to keep at least three outputs.
struct ConvGeometry
{
  std::size_t kernel;
  std::size_t stride;
  std::size_t out_len;
};

ConvGeometry conv_geometry(std::size_t len, bool downsample)
{
  ConvGeometry g;
  g.stride = downsample && len >= 7 ? 2 : 1;
  // A width-4 window keeps the strided scan flush with the last sample, so no
  // trailing step (the newest observation, the proposal endpoint) is skipped.
  g.kernel = std::min<std::size_t>((len - 3) % g.stride == 0 ? 3 : 4, len);
  g.out_len = (len - g.kernel) / g.stride + 1;
  return g;
}

}  // namespace

void ModelConfig::validate() const
{
  const auto fail = [](const std::string & what) { throw std::invalid_argument("ModelConfig: " + what); };
  if (d == 0 || heads == 0 || d % heads != 0) fail("d must be a positive multiple of heads");
  if (norm_groups == 0 || d % norm_groups != 0) fail("d must be divisible by norm_groups");
  if (k < 1) fail("k must be >= 1");
  if (modes < 1) fail("modes must be >= 1");
  if (t_o < 5) fail("t_o must be >= 5");
  if (t_f < 2) fail("t_f must be >= 2");
  if (proposal_width == 0) fail("proposal_width must be positive");
  if (lane_points < 2) fail("lane_points must be >= 2");
  if (!(lane_radius > 0.0) || !(agent_radius > 0.0)) fail("radii must be positive");
}

nlohmann::json to_json(const ModelConfig & c)
{
  return {
    {"d", c.d},
    {"k", c.k},
    {"modes", c.modes},
    {"heads", c.heads},
    {"t_o", c.t_o},
    {"t_f", c.t_f},
    {"proposal_width", c.proposal_width},
    {"norm_groups", c.norm_groups},
    {"lane_points", c.lane_points},
    {"lane_radius", c.lane_radius},
    {"agent_radius", c.agent_radius},
    {"output_scale", c.output_scale},
    {"use_tpa", c.use_tpa},
    {"zero_init_headers", c.zero_init_headers},
  };
}

ModelConfig model_config_from_json(const nlohmann::json & j, ModelConfig c)
{
  c.d = j.value("d", c.d);
  c.k = j.value("k", c.k);
  c.modes = j.value("modes", c.modes);
  c.heads = j.value("heads", c.heads);
  c.t_o = j.value("t_o", c.t_o);
  c.t_f = j.value("t_f", c.t_f);
  c.proposal_width = j.value("proposal_width", c.proposal_width);
  c.norm_groups = j.value("norm_groups", c.norm_groups);
  c.lane_points = j.value("lane_points", c.lane_points);
  c.lane_radius = j.value("lane_radius", c.lane_radius);
  c.agent_radius = j.value("agent_radius", c.agent_radius);
  c.output_scale = j.value("output_scale", c.output_scale);
  c.use_tpa = j.value("use_tpa", c.use_tpa);
  c.zero_init_headers = j.value("zero_init_headers", c.zero_init_headers);
  c.validate();
  return c;
}

geom::RigidTransform PreparedScene::to_local(std::size_t agent) const
{
  return geom::RigidTransform::to_local(positions.at(agent), headings.at(agent));
}

geom::RigidTransform PreparedScene::to_world(std::size_t agent) const { return to_local(agent).inverse(); }

PreparedScene prepare_scene(
  const ModelConfig & config, const std::vector<geom::Trajectory> & pasts,
  const std::vector<geom::Polyline> & lanes, double dt)
{
  if (pasts.empty()) throw std::invalid_argument("prepare_scene: no agents");
  PreparedScene s;
  s.num_agents = pasts.size();
  const std::size_t n = pasts.size();
  const std::size_t t_o = config.t_o;
  s.past = ad::Tensor(ad::Shape{n, t_o, 4});
  for (std::size_t i = 0; i < n; ++i) {
    if (pasts[i].size() != t_o) {
      throw std::invalid_argument(
        "prepare_scene: agent " + std::to_string(i) + " has " + std::to_string(pasts[i].size()) +
        " past points, expected " + std::to_string(t_o));
    }
    const auto motion = lanegraph::estimate_motion(pasts[i], dt);
    s.positions.push_back(motion.position);
    s.headings.push_back(motion.heading);
    const auto tf = s.to_local(i);
    geom::Point2 prev = tf.apply(pasts[i][0]);
    for (std::size_t t = 0; t < t_o; ++t) {
      const geom::Point2 p = tf.apply(pasts[i][t]);
      const std::size_t base = (i * t_o + t) * 4;
      s.past[base] = kPositionScale * p.x;
      s.past[base + 1] = kPositionScale * p.y;
      s.past[base + 2] = p.x - prev.x;
      s.past[base + 3] = p.y - prev.y;
      prev = p;
    }
  }

  // (agent, lane) rows, nearest lane first per agent.
  std::vector<geom::Polyline> sampled;
  sampled.reserve(lanes.size());
  for (const auto & lane : lanes) sampled.push_back(geom::resample(lane, config.lane_points));
  std::vector<double> rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      const double dist = std::abs(geom::project(lanes[l], s.positions[i]).n);
      if (dist <= config.lane_radius) near.emplace_back(dist, l);
    }
    std::sort(near.begin(), near.end());
    const auto tf = s.to_local(i);
    for (const auto & [dist, l] : near) {
      for (const auto & p : sampled[l].points()) {
        const geom::Point2 q = tf.apply(p);
        rows.push_back(kPositionScale * q.x);
        rows.push_back(kPositionScale * q.y);
      }
      s.lane_owner.push_back(i);
      s.lane_ids.push_back(l);
    }
  }
  s.lane_rows = ad::Tensor(ad::Shape{s.lane_owner.size(), 2 * config.lane_points}, std::move(rows));

  std::vector<double> nrows;
  for (std::size_t i = 0; i < n; ++i) {
    const auto tf = s.to_local(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || geom::distance(s.positions[i], s.positions[j]) > config.agent_radius) continue;
      const geom::Point2 rel = tf.apply(s.positions[j]);
      const double dh = s.headings[j] - s.headings[i];
      nrows.insert(nrows.end(), {kPositionScale * rel.x, kPositionScale * rel.y, std::cos(dh), std::sin(dh)});
      s.neighbor_src.push_back(j);
      s.neighbor_owner.push_back(i);
    }
  }
  s.neighbor_rows = ad::Tensor(ad::Shape{s.neighbor_src.size(), 4}, std::move(nrows));
  return s;
}

// ---------------------------------------------------------------- Model ---

Model::Model(ModelConfig config, std::uint64_t seed) : config_(config), seed_(seed)
{
  config_.validate();
  const std::size_t d = config_.d;
  actor_conv1_ = make_linear("actor.conv1", 3 * 4, d);
  actor_norm1_ = make_norm("actor.norm1", d);
  actor_conv2_ = make_linear("actor.conv2", conv_geometry(config_.t_o - 2, true).kernel * d, d);
  actor_norm2_ = make_norm("actor.norm2", d);
  actor_out_ = make_linear("actor.out", d, d);
  lane_in_ = make_linear("lane.in", 2 * config_.lane_points, d);
  lane_norm_ = make_norm("lane.norm", d);
  lane_out_ = make_linear("lane.out", d, d);
  fuse_attention_ = make_attention("fuse.attn", d, d);
  fuse_norm_ = make_norm("fuse.norm", d);
  if (config_.use_tpa) {
    proposal_header_ = make_header("proposal_header", config_.k, false);
    const std::size_t k1 = conv_geometry(config_.t_f, true).kernel;
    const std::size_t k2 = conv_geometry(conv_geometry(config_.t_f, true).out_len, true).kernel;
    pe_conv1_ = make_linear("proposal_encoder.conv1", k1 * 2, d);
    pe_conv2_ = make_linear("proposal_encoder.conv2", k2 * d, d);
    pe_norm_ = make_norm("proposal_encoder.norm", d);
    pe_out_ = make_linear("proposal_encoder.out", d, config_.proposal_width);
    proposal_attention_ = make_attention("proposal_attention", d, config_.proposal_width);
    tpa_projection_ = make_linear("proposal_attention.projection", 2 * d, d);
    tpa_norm_ = make_norm("proposal_attention.norm", d);
  }
  a2l_attention_ = make_attention("interaction.a2l", d, d);
  a2a_attention_ = make_attention("interaction.a2a", d, d);
  a2a_relation_ = make_linear("interaction.relation", 4, d);
  ffn1_ = make_linear("interaction.ffn1", d, d);
  ffn2_ = make_linear("interaction.ffn2", d, d);
  prediction_header_ = make_header("prediction_header", config_.modes, true);
}

Model::Linear Model::make_linear(
  const std::string & name, std::size_t in, std::size_t out, double scale, bool bias)
{
  // Each layer draws from its own stream derived from the model seed and the
  // registration index, so adding a layer does not reshuffle the others.
  std::mt19937_64 gen(seed_ + 0x9E3779B97F4A7C15ULL * (++init_counter_));
  const double bound = scale / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Tensor w(ad::Shape{in, out});
  for (auto & v : w.data()) v = bound > 0.0 ? dist(gen) : 0.0;
  Linear l;
  l.w = params_.add(name + ".weight", std::move(w));
  if (bias) l.b = params_.add(name + ".bias", ad::Tensor(ad::Shape{out}));
  return l;
}

Model::Norm Model::make_norm(const std::string & name, std::size_t width)
{
  return {params_.add(name + ".gamma", ad::Tensor(ad::Shape{width}, 1.0)),
          params_.add(name + ".beta", ad::Tensor(ad::Shape{width}))};
}

Model::Attention Model::make_attention(const std::string & name, std::size_t dq, std::size_t dkv)
{
  const std::size_t d = config_.d;
  const auto weight = [&](const std::string & suffix, std::size_t in, std::size_t out) {
    return make_linear(name + "." + suffix, in, out, 1.0, false).w;
  };
  Attention a;
  a.wq = weight("q", dq, d);
  a.wk = weight("k", dkv, d);
  a.wv = weight("v", dkv, d);
  a.wo = weight("o", d, d);
  return a;
}

Model::Header Model::make_header(const std::string & name, std::size_t count, bool scored)
{
  const std::size_t d = config_.d;
  Header h;
  h.count = count;
  h.scored = scored;
  h.l1 = make_linear(name + ".fc1", d, d);
  h.n1 = make_norm(name + ".norm1", d);
  h.l2 = make_linear(name + ".fc2", d, d);
  h.n2 = make_norm(name + ".norm2", d);
  h.out = make_linear(name + ".reg", d, count * config_.t_f * 2, config_.zero_init_headers ? 0.0 : 0.1);
  if (scored) {
    h.score_end = make_linear(name + ".score_end", 2, d);
    h.score_hidden = make_linear(name + ".score_hidden", 2 * d, d);
    h.score_out = make_linear(name + ".score_out", d, 1);
  }
  return h;
}

ad::Var Model::linear(ad::Tape & tape, const Linear & l, const ad::Var & x) const
{
  return ad::add_bias(ad::matmul(x, tape.param(l.w)), tape.param(l.b));
}

ad::Var Model::norm(ad::Tape & tape, const Norm & n, const ad::Var & x) const
{
  return ad::group_norm(x, tape.param(n.gamma), tape.param(n.beta), config_.norm_groups);
}

ad::Var Model::attend(
  ad::Tape & tape, const Attention & a, const ad::Var & queries, const ad::Var & keys,
  const std::vector<std::size_t> & owner, std::vector<ad::Tensor> * weights) const
{
  const std::size_t nq = queries.shape()[0];
  const std::size_t d = config_.d;
  if (!keys.valid() || owner.empty()) {
    if (weights) weights->assign(config_.heads, ad::Tensor(ad::Shape{nq, 0}));
    return tape.constant(ad::Tensor(ad::Shape{nq, d}));
  }
  const std::size_t nk = owner.size();
  ad::Tensor mask(ad::Shape{nq, nk}, kMaskedLogit);
  std::vector<bool> has_keys(nq, false);
  for (std::size_t j = 0; j < nk; ++j) {
    mask.at(owner[j], j) = 0.0;
    has_keys[owner[j]] = true;
  }
  bool all_rows = true;
  ad::Tensor row_mask(ad::Shape{nq, d}, 1.0);
  for (std::size_t i = 0; i < nq; ++i) {
    if (has_keys[i]) continue;
    all_rows = false;
    for (std::size_t j = 0; j < nk; ++j) mask.at(i, j) = 0.0;  // finite softmax, zeroed below
    for (std::size_t c = 0; c < d; ++c) row_mask.at(i, c) = 0.0;
  }
  const ad::Var q = ad::matmul(queries, tape.param(a.wq));
  const ad::Var kk = ad::matmul(keys, tape.param(a.wk));
  const ad::Var v = ad::matmul(keys, tape.param(a.wv));
  const ad::Var mask_var = tape.constant(std::move(mask));
  const std::size_t dh = d / config_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<ad::Var> heads;
  if (weights) weights->clear();
  for (std::size_t h = 0; h < config_.heads; ++h) {
    const ad::Var qh = ad::slice(q, 1, h * dh, (h + 1) * dh);
    const ad::Var kh = ad::slice(kk, 1, h * dh, (h + 1) * dh);
    const ad::Var vh = ad::slice(v, 1, h * dh, (h + 1) * dh);
    const ad::Var logits = ad::add(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt), mask_var);
    const ad::Var att = ad::softmax(logits);
    if (weights) weights->push_back(att.value());
    heads.push_back(ad::matmul(att, vh));
  }
  ad::Var out = ad::matmul(heads.size() == 1 ? heads[0] : ad::concat(heads, 1), tape.param(a.wo));
  if (!all_rows) out = ad::mul(out, tape.constant(std::move(row_mask)));
  return out;
}

SceneFeatures Model::feature_extractor(ad::Tape & tape, const PreparedScene & scene) const
{
  const std::size_t n = scene.num_agents;
  const std::size_t d = config_.d;
  const ad::Var past = tape.constant(scene.past);
  const std::size_t t1 = config_.t_o - 2;
  const ConvGeometry g2 = conv_geometry(t1, true);
  ad::Var c1 = ad::relu(norm(tape, actor_norm1_, linear(tape, actor_conv1_, ad::im2col1d(past, 3, 1))));
  const std::size_t t2 = g2.out_len;
  ad::Var c2 = ad::relu(norm(
    tape, actor_norm2_,
    linear(tape, actor_conv2_, ad::im2col1d(ad::reshape(c1, ad::Shape{n, t1, d}), g2.kernel, g2.stride))));
  const ad::Var pooled = ad::reduce_mean(ad::reshape(c2, ad::Shape{n, t2, d}), 1);
  const ad::Var actor = linear(tape, actor_out_, pooled);

  SceneFeatures f;
  ad::Var fused = actor;
  if (!scene.lane_owner.empty()) {
    const ad::Var rows = tape.constant(scene.lane_rows);
    f.lane_features = linear(tape, lane_out_, ad::relu(norm(tape, lane_norm_, linear(tape, lane_in_, rows))));
    fused = ad::add(actor, attend(tape, fuse_attention_, actor, f.lane_features, scene.lane_owner));
  }
  f.h_fe = ad::relu(norm(tape, fuse_norm_, fused));
  return f;
}

HeaderOutput Model::run_header(ad::Tape & tape, const Header & h, const ad::Var & x) const
{
  const std::size_t n = x.shape()[0];
  const std::size_t t_f = config_.t_f;
  const ad::Var x1 = ad::relu(norm(tape, h.n1, linear(tape, h.l1, x)));
  const ad::Var x2 = norm(tape, h.n2, linear(tape, h.l2, x1));
  const ad::Var r = ad::relu(ad::add(x2, x));
  const ad::Var flat = ad::scale(linear(tape, h.out, r), config_.output_scale);
  HeaderOutput out;
  out.trajectories = ad::reshape(flat, ad::Shape{n * h.count, t_f, 2});
  if (h.scored) {
    const ad::Var rows = ad::reshape(flat, ad::Shape{n * h.count, t_f * 2});
    const ad::Var ends = ad::scale(ad::slice(rows, 1, 2 * (t_f - 1), 2 * t_f), kPositionScale);
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < n; ++i) owner.insert(owner.end(), h.count, i);
    const ad::Var ctx = ad::gather_rows(r, owner);
    const ad::Var end_feat = ad::relu(linear(tape, h.score_end, ends));
    const ad::Var hidden = ad::relu(linear(tape, h.score_hidden, ad::concat({ctx, end_feat}, 1)));
    out.scores = ad::reshape(linear(tape, h.score_out, hidden), ad::Shape{n, h.count});
  }
  return out;
}

ad::Var Model::proposal_header(ad::Tape & tape, const ad::Var & h_fe) const
{
  if (!config_.use_tpa) throw std::logic_error("proposal_header: model built without TPA");
  return run_header(tape, proposal_header_, h_fe).trajectories;
}

ad::Var Model::proposal_encoder(ad::Tape & tape, const ad::Var & proposals) const
{
  if (!config_.use_tpa) throw std::logic_error("proposal_encoder: model built without TPA");
  const std::size_t b = proposals.shape()[0];
  const std::size_t d = config_.d;
  const ConvGeometry g1 = conv_geometry(config_.t_f, true);
  const ConvGeometry g2 = conv_geometry(g1.out_len, true);
  const ad::Var x = ad::scale(proposals, kPositionScale);
  const ad::Var c1 = ad::relu(linear(tape, pe_conv1_, ad::im2col1d(x, g1.kernel, g1.stride)));
  const ad::Var c2 = ad::relu(norm(
    tape, pe_norm_,
    linear(tape, pe_conv2_, ad::im2col1d(ad::reshape(c1, ad::Shape{b, g1.out_len, d}), g2.kernel, g2.stride))));
  const ad::Var pooled = ad::reduce_mean(ad::reshape(c2, ad::Shape{b, g2.out_len, d}), 1);
  return linear(tape, pe_out_, pooled);
}

ad::Var Model::proposal_attention(ad::Tape & tape, const ad::Var & h_fe, const ad::Var & g) const
{
  return proposal_attention(tape, h_fe, g, nullptr);
}

ad::Var Model::proposal_attention(
  ad::Tape & tape, const ad::Var & h_fe, const ad::Var & g, std::vector<ad::Tensor> * weights) const
{
  if (!config_.use_tpa) throw std::logic_error("proposal_attention: model built without TPA");
  const std::size_t n = h_fe.shape()[0];
  if (g.shape()[0] % n != 0) {
    throw std::invalid_argument("proposal_attention: proposal rows not divisible by agent count");
  }
  const std::size_t k = g.shape()[0] / n;
  std::vector<std::size_t> owner(g.shape()[0]);
  for (std::size_t j = 0; j < owner.size(); ++j) owner[j] = j / k;
  const ad::Var h_mha = attend(tape, proposal_attention_, h_fe, g, owner, weights);
  return ad::concat({h_fe, h_mha}, 1);
}

ad::Var Model::interaction_stage(
  ad::Tape & tape, const ad::Var & h, const SceneFeatures & features, const PreparedScene & scene) const
{
  ad::Var a = h;
  if (!scene.lane_owner.empty()) {
    a = ad::add(a, attend(tape, a2l_attention_, h, features.lane_features, scene.lane_owner));
  }
  ad::Var b = a;
  if (!scene.neighbor_src.empty()) {
    const ad::Var rel = linear(tape, a2a_relation_, tape.constant(scene.neighbor_rows));
    const ad::Var keys = ad::add(ad::gather_rows(a, scene.neighbor_src), rel);
    b = ad::add(b, attend(tape, a2a_attention_, a, keys, scene.neighbor_owner));
  }
  return ad::add(b, linear(tape, ffn2_, ad::relu(linear(tape, ffn1_, b))));
}

HeaderOutput Model::prediction_header(ad::Tape & tape, const ad::Var & refined) const
{
  return run_header(tape, prediction_header_, refined);
}

ForwardResult Model::forward(ad::Tape & tape, const PreparedScene & scene) const
{
  const SceneFeatures features = feature_extractor(tape, scene);
  ForwardResult r;
  ad::Var x = features.h_fe;
  if (config_.use_tpa) {
    r.proposals = proposal_header(tape, features.h_fe);
    const ad::Var g = proposal_encoder(tape, r.proposals);
    const ad::Var h = proposal_attention(tape, features.h_fe, g);
    x = ad::relu(norm(tape, tpa_norm_, linear(tape, tpa_projection_, h)));
  }
  const ad::Var refined = interaction_stage(tape, x, features, scene);
  const HeaderOutput out = prediction_header(tape, refined);
  r.trajectories = out.trajectories;
  r.scores = out.scores;
  return r;
}

ad::Var agent_trajectories(const ad::Var & stacked, std::size_t agent, std::size_t count)
{
  return ad::slice(stacked, 0, agent * count, (agent + 1) * count);
}

ad::Var agent_scores(const ad::Var & scores, std::size_t agent)
{
  const std::size_t m = scores.shape()[1];
  return ad::reshape(ad::slice(scores, 0, agent, agent + 1), ad::Shape{m});
}

namespace
{

metrics::MultiModalPrediction world_set(
  const ad::Tensor & stacked, const PreparedScene & scene, std::size_t agent, std::size_t count,
  const ad::Tensor * scores)
{
  const std::size_t t_f = stacked.shape()[1];
  const auto tf = scene.to_world(agent);
  metrics::MultiModalPrediction p;
  for (std::size_t m = 0; m < count; ++m) {
    geom::Trajectory traj;
    traj.reserve(t_f);
    for (std::size_t t = 0; t < t_f; ++t) {
      const std::size_t base = ((agent * count + m) * t_f + t) * 2;
      traj.push_back(tf.apply({stacked[base], stacked[base + 1]}));
    }
    p.trajectories.push_back(std::move(traj));
    p.scores.push_back(scores ? (*scores)[agent * count + m] : 0.0);
  }
  return p;
}

}  // namespace

metrics::MultiModalPrediction to_world(
  const ForwardResult & result, const PreparedScene & scene, std::size_t agent, std::size_t modes)
{
  return world_set(result.trajectories.value(), scene, agent, modes, &result.scores.value());
}

metrics::MultiModalPrediction proposals_to_world(
  const ForwardResult & result, const PreparedScene & scene, std::size_t agent, std::size_t k)
{
  return world_set(result.proposals.value(), scene, agent, k, nullptr);
}

}  // namespace laneloss::model
