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

#include "laneloss/lanegraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace laneloss::harness
{

namespace
{

constexpr const char * kCheckpointFormat = "laneloss-checkpoint";
constexpr int kCheckpointVersion = 1;

void check_keys(const nlohmann::json & j, const std::string & where, const std::set<std::string> & allowed)
{
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto & [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

nlohmann::json train_to_json(const TrainConfig & t)
{
  return {
    {"epochs", t.epochs},
    {"batch_size", t.batch_size},
    {"lr", t.lr},
    {"lr_decay_epoch", t.lr_decay_epoch},
    {"lr_decay", t.lr_decay},
    {"use_lane_loss", t.use_lane_loss},
    {"max_lanes", t.max_lanes},
    {"lane_horizon", t.lane_horizon},
    {"alpha_score", t.weights.alpha_score},
    {"alpha_pred", t.weights.alpha_pred},
    {"alpha_prop", t.weights.alpha_prop},
    {"score_margin", t.weights.epsilon_margin},
    {"seed", t.seed},
  };
}

TrainConfig train_from_json(const nlohmann::json & j, TrainConfig t)
{
  check_keys(
    j, "train",
    {"epochs", "batch_size", "lr", "lr_decay_epoch", "lr_decay", "use_lane_loss", "max_lanes", "lane_horizon",
     "alpha_score", "alpha_pred", "alpha_prop", "score_margin", "seed"});
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.lr = j.value("lr", t.lr);
  t.lr_decay_epoch = j.value("lr_decay_epoch", t.lr_decay_epoch);
  t.lr_decay = j.value("lr_decay", t.lr_decay);
  t.use_lane_loss = j.value("use_lane_loss", t.use_lane_loss);
  t.max_lanes = j.value("max_lanes", t.max_lanes);
  t.lane_horizon = j.value("lane_horizon", t.lane_horizon);
  t.weights.alpha_score = j.value("alpha_score", t.weights.alpha_score);
  t.weights.alpha_pred = j.value("alpha_pred", t.weights.alpha_pred);
  t.weights.alpha_prop = j.value("alpha_prop", t.weights.alpha_prop);
  t.weights.epsilon_margin = j.value("score_margin", t.weights.epsilon_margin);
  t.seed = j.value("seed", t.seed);
  if (t.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(t.lr > 0.0) || !(t.lr_decay > 0.0)) throw ConfigError("train.lr and train.lr_decay must be positive");
  if (t.max_lanes == 0) throw ConfigError("train.max_lanes must be >= 1");
  if (!(t.lane_horizon > 0.0)) throw ConfigError("train.lane_horizon must be positive");
  return t;
}

template <typename F>
auto as_config_error(const std::string & where, F && f)
{
  try {
    return f();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception & e) {
    throw ConfigError(where + ": " + e.what());
  }
}

geom::Trajectory to_frame(const geom::Trajectory & t, const geom::RigidTransform & tf)
{
  geom::Trajectory out;
  out.reserve(t.size());
  for (const auto & p : t) out.push_back(tf.apply(p));
  return out;
}

bool finite(double v) { return std::isfinite(v); }

std::string metric_name(const char * base, std::size_t k) { return std::string(base) + "_" + std::to_string(k); }

}  // namespace

DivergenceError::DivergenceError(std::size_t e, std::size_t b)
: std::runtime_error(
    "training diverged: non-finite loss in epoch " + std::to_string(e) + ", batch " + std::to_string(b)),
  epoch(e),
  batch(b)
{
}

RunConfig default_run_config()
{
  RunConfig c;
  c.model.d = 32;
  c.model.k = 6;
  c.model.modes = 6;
  return c;
}

nlohmann::json to_json(const RunConfig & c)
{
  nlohmann::json seeds = nlohmann::json::array();
  for (auto s : c.ablation_seeds) seeds.push_back(s);
  return {
    {"scenario", scenario::to_json(c.scenario)},
    {"model", model::to_json(c.model)},
    {"train", train_to_json(c.train)},
    {"eval", {{"ks", c.eval.ks}}},
    {"data", {{"train_scenes", c.train_scenes}, {"test_scenes", c.test_scenes}}},
    {"ablation", {{"seeds", seeds}}},
    {"out_dir", c.out_dir},
  };
}

RunConfig run_config_from_json(const nlohmann::json & j, RunConfig c)
{
  check_keys(j, "config", {"scenario", "model", "train", "eval", "data", "ablation", "out_dir"});
  if (j.contains("scenario")) {
    c.scenario = as_config_error("scenario", [&] { return scenario::scenario_config_from_json(j["scenario"], c.scenario); });
  }
  if (j.contains("model")) {
    c.model = as_config_error("model", [&] { return model::model_config_from_json(j["model"], c.model); });
  }
  if (j.contains("train")) {
    c.train = as_config_error("train", [&] { return train_from_json(j["train"], c.train); });
  }
  if (j.contains("eval")) {
    check_keys(j["eval"], "eval", {"ks"});
    c.eval.ks = as_config_error("eval", [&] { return j["eval"].value("ks", c.eval.ks); });
  }
  if (j.contains("data")) {
    check_keys(j["data"], "data", {"train_scenes", "test_scenes"});
    as_config_error("data", [&] {
      c.train_scenes = j["data"].value("train_scenes", c.train_scenes);
      c.test_scenes = j["data"].value("test_scenes", c.test_scenes);
      return 0;
    });
  }
  if (j.contains("ablation")) {
    check_keys(j["ablation"], "ablation", {"seeds"});
    c.ablation_seeds = as_config_error(
      "ablation", [&] { return j["ablation"].value("seeds", c.ablation_seeds); });
    if (c.ablation_seeds.empty()) throw ConfigError("ablation.seeds must not be empty");
  }
  if (j.contains("out_dir")) c.out_dir = as_config_error("out_dir", [&] { return j["out_dir"].get<std::string>(); });
  for (std::size_t k : c.eval.ks) {
    if (k < 1 || k > c.model.modes) {
      throw ConfigError("eval.ks entries must lie in [1, model.modes]");
    }
  }
  if (c.eval.ks.empty()) throw ConfigError("eval.ks must not be empty");
  if (c.scenario.t_o != c.model.t_o || c.scenario.t_f != c.model.t_f) {
    throw ConfigError("scenario and model horizons (t_o, t_f) must agree");
  }
  return c;
}

RunConfig load_run_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error & e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

// ----------------------------------------------------------- samples ---

PreparedSample prepare_sample(const scenario::Scene & s, const model::ModelConfig & mc, const TrainConfig & tc)
{
  std::vector<geom::Trajectory> pasts;
  for (const auto & a : s.agents) {
    if (a.past.size() != mc.t_o || a.future.size() != mc.t_f) {
      throw std::invalid_argument(
        "scene " + std::to_string(s.id) + ": track lengths do not match the model horizons");
    }
    pasts.push_back(a.past);
  }
  std::vector<geom::Polyline> centerlines;
  for (const auto & [id, seg] : s.map.segments()) centerlines.push_back(seg.centerline);

  PreparedSample out;
  out.scene = model::prepare_scene(mc, pasts, centerlines, s.dt);
  out.target = s.target;
  out.maneuver = s.maneuver;
  out.scene_id = s.id;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto & a = s.agents[i];
    const auto to_local = out.scene.to_local(i);
    const auto motion = lanegraph::estimate_motion(a.past, s.dt);
    const auto refs = lanegraph::extract_reference_lanes(s.map, a.past, tc.max_lanes, tc.lane_horizon);
    losses::AgentTargets t;
    t.future = to_frame(a.future, to_local);
    std::vector<geom::Polyline> world;
    for (const auto & r : refs) {
      t.lanes.push_back(to_frame(lanegraph::resample_reference(r, mc.t_f, motion.speed, s.dt), to_local));
      world.push_back(r.path);
    }
    out.targets.push_back(std::move(t));
    out.reference_lanes.push_back(std::move(world));
    out.futures.push_back(a.future);
  }
  return out;
}

std::vector<PreparedSample> prepare_samples(
  const std::vector<scenario::Scene> & scenes, const model::ModelConfig & mc, const TrainConfig & tc)
{
  std::vector<PreparedSample> out;
  out.reserve(scenes.size());
  for (const auto & s : scenes) out.push_back(prepare_sample(s, mc, tc));
  return out;
}

// ---------------------------------------------------------- training ---

SceneLoss scene_loss(ad::Tape & tape, const model::Model & m, const PreparedSample & s, const TrainConfig & tc)
{
  const auto & mc = m.config();
  const std::size_t n = s.scene.num_agents;
  const model::ForwardResult fr = m.forward(tape, s.scene);

  std::vector<ad::Var> trajs;
  for (std::size_t i = 0; i < n; ++i) trajs.push_back(model::agent_trajectories(fr.trajectories, i, mc.modes));
  const auto pred = losses::regression_loss(trajs, s.targets, tc.use_lane_loss);

  ad::Var score;
  for (std::size_t i = 0; i < n; ++i) {
    const ad::Var term = losses::score_loss(model::agent_scores(fr.scores, i), pred.winners[i], tc.weights.epsilon_margin);
    score = score.valid() ? ad::add(score, term) : term;
  }
  score = ad::scale(score, 1.0 / static_cast<double>(n));

  ad::Var prop;
  if (fr.proposals.valid()) {
    std::vector<ad::Var> props;
    for (std::size_t i = 0; i < n; ++i) props.push_back(model::agent_trajectories(fr.proposals, i, mc.k));
    prop = losses::regression_loss(props, s.targets, tc.use_lane_loss).loss;
  }

  SceneLoss out;
  out.total = losses::total_loss(score, pred.loss, prop, tc.weights);
  out.parts.total = out.total.value().item();
  out.parts.score = score.value().item();
  out.parts.pred = pred.loss.value().item();
  out.parts.prop = prop.valid() ? prop.value().item() : 0.0;
  return out;
}

nlohmann::json to_json(const EpochLog & log)
{
  return {
    {"epoch", log.epoch},
    {"lr", log.lr},
    {"total", log.mean.total},
    {"score", log.mean.score},
    {"pred", log.mean.pred},
    {"prop", log.mean.prop},
    {"batches", log.batches},
  };
}

double learning_rate(const TrainConfig & tc, std::size_t epoch)
{
  return epoch >= tc.lr_decay_epoch ? tc.lr * tc.lr_decay : tc.lr;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) { return scenario::scene_seed(seed, stream); }

void train(
  model::Model & m, TrainState & state, const std::vector<PreparedSample> & samples, const TrainConfig & tc,
  const std::function<void(const EpochLog &, const TrainState &)> & on_epoch)
{
  if (state.epoch >= tc.epochs) return;
  if (samples.empty()) throw ConfigError("training set is empty");
  ad::Gradients grads = ad::zero_gradients(m.params());
  const std::size_t batches = (samples.size() + tc.batch_size - 1) / tc.batch_size;
  for (std::size_t epoch = state.epoch; epoch < tc.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.lr = learning_rate(tc, epoch);
    log.batches = batches;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derived_seed(tc.seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * tc.batch_size;
      const std::size_t end = std::min(samples.size(), begin + tc.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      for (auto & g : grads) std::fill(g.data().begin(), g.data().end(), 0.0);
      for (std::size_t i = begin; i < end; ++i) {
        ad::Tape tape(&m.params());
        const SceneLoss sl = scene_loss(tape, m, samples[order[i]], tc);
        if (!finite(sl.parts.total)) throw DivergenceError(epoch, b);
        tape.backward(sl.total);
        tape.accumulate_param_grads(grads, weight);
        log.mean.total += sl.parts.total;
        log.mean.score += sl.parts.score;
        log.mean.pred += sl.parts.pred;
        log.mean.prop += sl.parts.prop;
      }
      for (const auto & g : grads) {
        if (!std::all_of(g.data().begin(), g.data().end(), finite)) throw DivergenceError(epoch, b);
      }
      ad::AdamConfig adam;
      adam.lr = log.lr;
      ad::adam_step(m.params(), grads, state.adam, adam);
    }
    const double count = static_cast<double>(samples.size());
    log.mean.total /= count;
    log.mean.score /= count;
    log.mean.pred /= count;
    log.mean.prop /= count;
    state.epoch = epoch + 1;
    if (on_epoch) on_epoch(log, state);
  }
}

// -------------------------------------------------------- checkpoints ---

nlohmann::json checkpoint_to_json(const model::Model & m, const TrainState & state, const TrainConfig & tc)
{
  return {
    {"format", kCheckpointFormat},
    {"version", kCheckpointVersion},
    {"model", model::to_json(m.config())},
    {"train", train_to_json(tc)},
    {"epoch", state.epoch},
    {"parameters", ad::parameters_to_json(m.params())},
    {"adam", ad::adam_state_to_json(state.adam)},
  };
}

Checkpoint checkpoint_from_json(const nlohmann::json & j)
{
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
    throw std::invalid_argument("not a laneloss checkpoint");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw std::invalid_argument("unsupported checkpoint version");
  }
  const model::ModelConfig mc = model::model_config_from_json(j.at("model"));
  const TrainConfig tc = train_from_json(j.at("train"), TrainConfig{});
  Checkpoint c{model::Model(mc, tc.seed), TrainState{}, tc};
  ad::parameters_from_json(c.model.params(), j.at("parameters"));
  c.state.epoch = j.at("epoch").get<std::size_t>();
  c.state.adam = ad::adam_state_from_json(j.at("adam"));
  return c;
}

void save_checkpoint(const std::string & path, const model::Model & m, const TrainState & state, const TrainConfig & tc)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << checkpoint_to_json(m, state, tc).dump() << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  try {
    return checkpoint_from_json(nlohmann::json::parse(in));
  } catch (const std::exception & e) {
    throw std::runtime_error("checkpoint '" + path + "': " + e.what());
  }
}

// --------------------------------------------------------- evaluation ---

std::vector<metrics::MultiModalPrediction> predict(const model::Model & m, const PreparedSample & s)
{
  ad::Tape tape(&m.params());
  const model::ForwardResult fr = m.forward(tape, s.scene);
  std::vector<metrics::MultiModalPrediction> out;
  for (std::size_t i = 0; i < s.scene.num_agents; ++i) {
    out.push_back(model::to_world(fr, s.scene, i, m.config().modes));
  }
  return out;
}

std::vector<metrics::AgentReport> evaluate_reports(
  const model::Model & m, const std::vector<PreparedSample> & samples, const EvalConfig & ec)
{
  if (ec.ks.empty()) throw ConfigError("eval.ks must not be empty");
  const std::size_t k_lane = *std::max_element(ec.ks.begin(), ec.ks.end());
  std::vector<metrics::AgentReport> reports;
  reports.reserve(samples.size());
  for (const auto & s : samples) {
    ad::Tape tape(&m.params());
    const model::ForwardResult fr = m.forward(tape, s.scene);
    const auto pred = model::to_world(fr, s.scene, s.target, m.config().modes);
    const auto & gt = s.futures[s.target];
    metrics::AgentReport r;
    r.maneuver = s.maneuver;
    for (std::size_t k : ec.ks) {
      r.values[metric_name("minADE", k)] = metrics::min_ade(pred, gt, k);
      r.values[metric_name("minFDE", k)] = metrics::min_fde(pred, gt, k);
    }
    r.values[metric_name("minLaneFDE", k_lane)] = metrics::min_lane_fde(pred, s.reference_lanes[s.target], k_lane);
    reports.push_back(std::move(r));
  }
  return reports;
}

EvalReport evaluate(const model::Model & m, const std::vector<PreparedSample> & samples, const EvalConfig & ec)
{
  const auto reports = evaluate_reports(m, samples, ec);
  EvalReport r;
  r.table = metrics::aggregate(reports, {metrics::turn_subset()});
  for (std::size_t k : ec.ks) {
    r.columns.push_back(metric_name("minADE", k));
    r.columns.push_back(metric_name("minFDE", k));
  }
  r.columns.push_back(metric_name("minLaneFDE", *std::max_element(ec.ks.begin(), ec.ks.end())));
  return r;
}

namespace
{

double mean_of(const std::map<std::string, metrics::MetricSummary> & m, const std::string & name)
{
  const auto it = m.find(name);
  return it == m.end() ? std::nan("") : it->second.mean;
}

const std::map<std::string, metrics::MetricSummary> & subset_of(const EvalReport & r, const std::string & name)
{
  static const std::map<std::string, metrics::MetricSummary> empty;
  const auto it = r.table.subsets.find(name);
  return it == r.table.subsets.end() ? empty : it->second;
}

std::size_t count_of(const std::map<std::string, metrics::MetricSummary> & m)
{
  std::size_t n = 0;
  for (const auto & [name, s] : m) n = std::max(n, s.count + s.missing);
  return n;
}

std::string fixed(double v, int width = 10)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%*.4f", width, v);
  return buf;
}

std::string padded(const std::string & s, std::size_t width)
{
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string right(const std::string & s, std::size_t width)
{
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

nlohmann::json to_json(const EvalReport & r)
{
  nlohmann::json out;
  out["columns"] = r.columns;
  out["metrics"] = metrics::to_json(r.table);
  nlohmann::json rows = nlohmann::json::object();
  nlohmann::json all = nlohmann::json::object();
  nlohmann::json turn = nlohmann::json::object();
  for (const auto & c : r.columns) {
    all[c] = mean_of(r.table.overall, c);
    turn[c] = mean_of(subset_of(r, "turn"), c);
  }
  rows["all"] = all;
  rows["turn"] = turn;
  out["table"] = rows;
  out["agents"] = {{"all", count_of(r.table.overall)}, {"turn", count_of(subset_of(r, "turn"))}};
  return out;
}

std::string format_report(const EvalReport & r)
{
  std::ostringstream os;
  os << padded("subset", 8) << right("agents", 8);
  for (const auto & c : r.columns) os << right(c, 14);
  os << '\n';
  const auto row = [&](const std::string & name, const std::map<std::string, metrics::MetricSummary> & m) {
    os << padded(name, 8) << right(std::to_string(count_of(m)), 8);
    for (const auto & c : r.columns) os << fixed(mean_of(m, c), 14);
    os << '\n';
  };
  row("all", r.table.overall);
  row("turn", subset_of(r, "turn"));
  return os.str();
}

// ----------------------------------------------------------- ablation ---

std::vector<Variant> ablation_variants()
{
  return {
    {"Baseline", false, false},
    {"+ TPA", true, false},
    {"+ Lane Loss", false, true},
    {"+ Lane Loss + TPA", true, true},
  };
}

std::vector<AblationRow> run_ablation(
  const RunConfig & config, std::uint64_t seed, const std::vector<Variant> & variants,
  const std::function<void(const std::string &)> & progress)
{
  scenario::ScenarioConfig sc = config.scenario;
  sc.seed = derived_seed(seed, 1);
  const auto train_scenes = scenario::generate_dataset(sc, config.train_scenes);
  sc.seed = derived_seed(seed, 2);
  const auto test_scenes = scenario::generate_dataset(sc, config.test_scenes);
  const auto train_samples = prepare_samples(train_scenes, config.model, config.train);
  const auto test_samples = prepare_samples(test_scenes, config.model, config.train);

  std::vector<AblationRow> rows;
  for (const auto & v : variants) {
    model::ModelConfig mc = config.model;
    mc.use_tpa = v.use_tpa;
    TrainConfig tc = config.train;
    tc.use_lane_loss = v.use_lane_loss;
    tc.seed = derived_seed(seed, 3);
    model::Model m(mc, tc.seed);
    TrainState state;
    AblationRow row;
    row.variant = v;
    row.seed = seed;
    train(m, state, train_samples, tc, [&](const EpochLog & log, const TrainState &) {
      row.log.push_back(log);
      if (progress) {
        progress(v.name + " seed " + std::to_string(seed) + ": " + to_json(log).dump());
      }
    });
    row.report = evaluate(m, test_samples, config.eval);
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json ablation_to_json(const std::vector<AblationRow> & rows)
{
  nlohmann::json out;
  out["rows"] = nlohmann::json::array();
  std::map<std::string, std::vector<const AblationRow *>> by_variant;
  std::vector<std::string> names;
  for (const auto & r : rows) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto & e : r.log) log.push_back(to_json(e));
    out["rows"].push_back({
      {"variant", r.variant.name},
      {"use_tpa", r.variant.use_tpa},
      {"use_lane_loss", r.variant.use_lane_loss},
      {"seed", r.seed},
      {"report", to_json(r.report)},
      {"log", log},
    });
    if (!by_variant.count(r.variant.name)) names.push_back(r.variant.name);
    by_variant[r.variant.name].push_back(&r);
  }
  nlohmann::json mean = nlohmann::json::array();
  for (const auto & name : names) {
    const auto & group = by_variant[name];
    nlohmann::json all = nlohmann::json::object();
    nlohmann::json turn = nlohmann::json::object();
    for (const auto & c : group.front()->report.columns) {
      double a = 0.0;
      double t = 0.0;
      for (const auto * r : group) {
        a += mean_of(r->report.table.overall, c);
        t += mean_of(subset_of(r->report, "turn"), c);
      }
      all[c] = a / static_cast<double>(group.size());
      turn[c] = t / static_cast<double>(group.size());
    }
    mean.push_back({{"variant", name}, {"seeds", group.size()}, {"all", all}, {"turn", turn}});
  }
  out["mean"] = mean;
  return out;
}

std::string format_ablation(const std::vector<AblationRow> & rows)
{
  if (rows.empty()) return "";
  const auto & columns = rows.front().report.columns;
  std::ostringstream os;
  for (const char * subset : {"all", "turn"}) {
    os << (std::string(subset) == "all" ? "Full set\n" : "Turn subset\n");
    os << padded("variant", 20) << right("seed", 22);
    for (const auto & c : columns) os << right(c, 14);
    os << '\n';
    for (const auto & r : rows) {
      const auto & m = std::string(subset) == "all" ? r.report.table.overall : subset_of(r.report, "turn");
      os << padded(r.variant.name, 20) << right(std::to_string(r.seed), 22);
      for (const auto & c : columns) os << fixed(mean_of(m, c), 14);
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace laneloss::harness
