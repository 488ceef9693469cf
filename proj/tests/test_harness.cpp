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
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include <sys/wait.h>
#include <unistd.h>

namespace laneloss::harness
{
namespace
{

namespace fs = std::filesystem;

fs::path scratch(const std::string & name)
{
  const fs::path dir = fs::temp_directory_path() / ("laneloss_harness_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

/// Small model and data so every training test stays in the seconds range.
RunConfig small_run()
{
  RunConfig c = default_run_config();
  c.model.d = 16;
  c.model.heads = 2;
  c.model.k = 3;
  c.model.modes = 3;
  c.model.proposal_width = 16;
  c.train.batch_size = 8;
  c.train.epochs = 2;
  c.train_scenes = 32;
  c.test_scenes = 16;
  c.eval.ks = {3, 1};
  return c;
}

std::vector<PreparedSample> samples_for(const RunConfig & c, std::size_t count, std::uint64_t seed)
{
  scenario::ScenarioConfig sc = c.scenario;
  sc.seed = seed;
  return prepare_samples(scenario::generate_dataset(sc, count), c.model, c.train);
}

std::string params_dump(const model::Model & m) { return ad::parameters_to_json(m.params()).dump(); }

TEST(Training, LearningRateDecaysTenfold)
{
  TrainConfig tc;
  tc.lr_decay_epoch = 3;
  EXPECT_DOUBLE_EQ(learning_rate(tc, 0), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate(tc, 2), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate(tc, 3), 1e-4);
  EXPECT_DOUBLE_EQ(learning_rate(tc, 10), 1e-4);

  RunConfig c = small_run();
  c.train.epochs = 3;
  c.train.lr_decay_epoch = 2;
  const auto samples = samples_for(c, 16, 1);
  model::Model m(c.model, 0);
  TrainState state;
  std::vector<EpochLog> logs;
  train(m, state, samples, c.train, [&](const EpochLog & e, const TrainState &) { logs.push_back(e); });
  ASSERT_EQ(logs.size(), 3u);
  EXPECT_DOUBLE_EQ(logs[1].lr, logs[0].lr);
  EXPECT_DOUBLE_EQ(logs[2].lr, 0.1 * logs[1].lr);
  EXPECT_EQ(state.epoch, 3u);
}

TEST(Training, ZeroEpochsLeavesInitialization)
{
  RunConfig c = small_run();
  c.train.epochs = 0;
  const auto samples = samples_for(c, 8, 2);
  model::Model m(c.model, 5);
  const model::Model init(c.model, 5);
  TrainState state;
  train(m, state, samples, c.train);
  EXPECT_EQ(params_dump(m), params_dump(init));

  const auto path = scratch("zero.json");
  save_checkpoint(path.string(), m, state, c.train);
  const Checkpoint back = load_checkpoint(path.string());
  EXPECT_EQ(params_dump(back.model), params_dump(init));
  EXPECT_EQ(back.state.epoch, 0u);
}

TEST(Training, LossFallsOnDefaultConfig)
{
  // Default model and training recipe; a reduced scene count keeps it short.
  RunConfig c = default_run_config();
  c.train.epochs = 6;
  const auto samples = samples_for(c, 256, 3);
  model::Model m(c.model, c.train.seed);
  TrainState state;
  std::vector<EpochLog> logs;
  train(m, state, samples, c.train, [&](const EpochLog & e, const TrainState &) { logs.push_back(e); });
  ASSERT_EQ(logs.size(), 6u);
  EXPECT_LT(logs[5].mean.total, logs[0].mean.total);
  for (const auto & e : logs) {
    EXPECT_TRUE(std::isfinite(e.mean.total));
    EXPECT_NEAR(
      e.mean.total,
      c.train.weights.alpha_score * e.mean.score + c.train.weights.alpha_pred * e.mean.pred +
        c.train.weights.alpha_prop * e.mean.prop,
      1e-9 * std::max(1.0, e.mean.total));
  }
}

TEST(Training, ResumeMatchesUninterruptedRun)
{
  RunConfig c = small_run();
  c.train.epochs = 4;
  c.train.lr_decay_epoch = 3;
  const auto samples = samples_for(c, 24, 4);

  model::Model straight(c.model, 7);
  TrainState s1;
  train(straight, s1, samples, c.train);

  model::Model first(c.model, 7);
  TrainState s2;
  TrainConfig half = c.train;
  half.epochs = 2;
  train(first, s2, samples, half);
  const auto path = scratch("resume.json");
  save_checkpoint(path.string(), first, s2, c.train);
  Checkpoint ck = load_checkpoint(path.string());
  EXPECT_EQ(ck.state.epoch, 2u);
  train(ck.model, ck.state, samples, c.train);

  EXPECT_EQ(ck.state.epoch, 4u);
  EXPECT_EQ(params_dump(ck.model), params_dump(straight));
  EXPECT_EQ(ad::adam_state_to_json(ck.state.adam).dump(), ad::adam_state_to_json(s1.adam).dump());
}

TEST(Training, NonFiniteLossAbortsWithBatch)
{
  RunConfig c = small_run();
  c.train.batch_size = 4;
  auto samples = samples_for(c, 12, 5);
  // Poison one target of the last scene; batches come from a permutation, so
  // only the reported batch index is checked for range.
  samples.back().targets[0].future[3].x = std::numeric_limits<double>::quiet_NaN();
  model::Model m(c.model, 0);
  TrainState state;
  try {
    train(m, state, samples, c.train);
    FAIL() << "expected divergence";
  } catch (const DivergenceError & e) {
    EXPECT_EQ(e.epoch, 0u);
    EXPECT_LT(e.batch, 3u);
    EXPECT_NE(std::string(e.what()).find("batch " + std::to_string(e.batch)), std::string::npos);
  }
}

TEST(Training, DeterministicUnderFixedSeed)
{
  const RunConfig c = small_run();
  const auto samples = samples_for(c, 16, 6);
  model::Model a(c.model, 1);
  model::Model b(c.model, 1);
  TrainState sa, sb;
  train(a, sa, samples, c.train);
  train(b, sb, samples, c.train);
  EXPECT_EQ(params_dump(a), params_dump(b));
}

TEST(Evaluation, ReportColumnsAndPurity)
{
  const RunConfig c = small_run();
  const auto samples = samples_for(c, 40, 7);
  const model::Model m(c.model, 2);
  const std::string before = params_dump(m);
  const EvalReport r1 = evaluate(m, samples, c.eval);
  const EvalReport r2 = evaluate(m, samples, c.eval);
  EXPECT_EQ(to_json(r1).dump(), to_json(r2).dump());
  EXPECT_EQ(format_report(r1), format_report(r2));
  EXPECT_EQ(params_dump(m), before);

  for (const char * name : {"minADE_3", "minFDE_3", "minADE_1", "minFDE_1", "minLaneFDE_3"}) {
    EXPECT_NE(std::find(r1.columns.begin(), r1.columns.end(), name), r1.columns.end()) << name;
    ASSERT_TRUE(r1.table.overall.count(name)) << name;
    EXPECT_EQ(r1.table.overall.at(name).count + r1.table.overall.at(name).missing, samples.size());
  }
  ASSERT_TRUE(r1.table.subsets.count("turn"));
  // Only the target agent of each scene is scored.
  EXPECT_EQ(r1.table.overall.at("minFDE_3").count, samples.size());
  // More modes can only help.
  EXPECT_LE(r1.table.overall.at("minFDE_3").mean, r1.table.overall.at("minFDE_1").mean + 1e-12);
}

TEST(Evaluation, PredictionsAreWorldFrame)
{
  RunConfig c = small_run();
  c.model.zero_init_headers = true;
  const auto samples = samples_for(c, 5, 8);
  const model::Model m(c.model, 3);
  for (const auto & s : samples) {
    const auto preds = predict(m, s);
    ASSERT_EQ(preds.size(), s.futures.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      // A zeroed header predicts standing still at the current position.
      const geom::Point2 now = s.scene.positions[i];
      for (const auto & t : preds[i].trajectories) {
        for (const auto & p : t) EXPECT_NEAR(geom::distance(p, now), 0.0, 1e-9);
      }
    }
  }
}

TEST(Plot, SvgIsDeterministicAndColourCoded)
{
  const RunConfig c = small_run();
  scenario::ScenarioConfig sc = c.scenario;
  const auto scenes = scenario::generate_dataset(sc, 2);
  const model::Model m(c.model, 4);
  const auto sample = prepare_sample(scenes[0], c.model, c.train);
  const std::string a = render_svg(scenes[0], predict(m, sample));
  const std::string b = render_svg(scenes[0], predict(m, sample));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<?xml", 0), 0u);
  EXPECT_NE(a.find("<svg"), std::string::npos);
  // Lanes gray, past yellow, ground truth red, predictions green.
  for (const char * colour : {"#9e9e9e", "#e6b800", "#d62728", "#2ca02c"}) {
    EXPECT_NE(a.find(colour), std::string::npos) << colour;
  }
  const auto other = prepare_sample(scenes[1], c.model, c.train);
  EXPECT_NE(a, render_svg(scenes[1], predict(m, other)));
}

TEST(Config, RoundTripAndErrors)
{
  const RunConfig d = default_run_config();
  EXPECT_EQ(d.model.d, 32u);
  EXPECT_EQ(d.model.k, 6u);
  EXPECT_EQ(d.model.modes, 6u);
  EXPECT_EQ(d.train.max_lanes, 3u);
  EXPECT_EQ(d.train.batch_size, 32u);
  EXPECT_EQ(d.train.epochs, 20u);
  EXPECT_EQ(d.train_scenes, 5000u);
  EXPECT_DOUBLE_EQ(d.train.lr, 1e-3);

  EXPECT_EQ(to_json(run_config_from_json(to_json(d))).dump(), to_json(d).dump());
  const auto patched = run_config_from_json(nlohmann::json::parse(R"({"model": {"d": 8, "heads": 2}})"));
  EXPECT_EQ(patched.model.d, 8u);
  EXPECT_EQ(patched.model.k, 6u);

  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"modle": {}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"train": {"lr": "fast"}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"model": {"heads": 5}})")), ConfigError);
  EXPECT_THROW(
    run_config_from_json(nlohmann::json::parse(R"({"scenario": {"maneuver_mix": {"straight": 0.5}}})")), ConfigError);
}

TEST(Ablation, FourVariantsFromOneSeed)
{
  const auto v = ablation_variants();
  ASSERT_EQ(v.size(), 4u);
  EXPECT_FALSE(v[0].use_tpa || v[0].use_lane_loss);
  EXPECT_TRUE(v[1].use_tpa && !v[1].use_lane_loss);
  EXPECT_TRUE(!v[2].use_tpa && v[2].use_lane_loss);
  EXPECT_TRUE(v[3].use_tpa && v[3].use_lane_loss);

  RunConfig c = small_run();
  c.train.epochs = 1;
  c.train_scenes = 16;
  c.test_scenes = 8;
  const auto rows = run_ablation(c, 3, v);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto & r : rows) {
    EXPECT_EQ(r.seed, 3u);
    EXPECT_EQ(r.log.size(), 1u);
    if (!r.variant.use_tpa) {
      EXPECT_EQ(r.log[0].mean.prop, 0.0);
    }
  }
  EXPECT_EQ(ablation_to_json(rows).dump(), ablation_to_json(run_ablation(c, 3, v)).dump());
  EXPECT_NE(derived_seed(3, 0), derived_seed(3, 1));
  EXPECT_NE(derived_seed(3, 0), derived_seed(4, 0));
}

// ------------------------------------------------------------------- CLI ---

struct CliRun
{
  int code = -1;
  std::string out;
};

CliRun cli(const std::string & args, const std::string & env = "")
{
  const auto log = scratch("cli_out.txt");
  const std::string cmd = env + " \"" LANELOSS_CLI "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, test::read_file(log.string())};
}

TEST(Cli, ExitCodes)
{
  const fs::path dir = scratch("cli_codes");
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("generate --no-such-flag").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);

  const fs::path bad = scratch("bad.json");
  std::ofstream(bad) << R"({"train": {"lr": -1, "bogus": 1}})";
  EXPECT_EQ(cli("generate -n 2 -o \"" + dir.string() + "\" -c \"" + bad.string() + "\"").code, 2);

  const CliRun ok = cli("generate -n 3 -o \"" + dir.string() + "\"");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(scenario::read_dataset((dir / "dataset.jsonl").string()).size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "resolved_config.json"));

  // k outside [1, modes] is a configuration error.
  const fs::path cfg = scratch("tiny.json");
  std::ofstream(cfg) << R"({"model": {"d": 8, "heads": 2, "k": 2, "modes": 2, "proposal_width": 8},
                           "train": {"epochs": 1, "batch_size": 4}, "eval": {"ks": [2, 1]}})";
  const std::string common = " -o \"" + dir.string() + "\" -c \"" + cfg.string() + "\"";
  ASSERT_EQ(cli("train -d \"" + (dir / "dataset.jsonl").string() + "\"" + common).code, 0);
  const std::string ckpt = (dir / "checkpoint.json").string();
  const std::string data = (dir / "dataset.jsonl").string();
  EXPECT_EQ(cli("eval -m \"" + ckpt + "\" -d \"" + data + "\" -k 7" + common).code, 2);
  const CliRun eval = cli("eval -m \"" + ckpt + "\" -d \"" + data + "\" -k 2,1" + common);
  EXPECT_EQ(eval.code, 0) << eval.out;
  EXPECT_NE(eval.out.find("minLaneFDE_2"), std::string::npos) << eval.out;
  EXPECT_EQ(cli("plot -m \"" + ckpt + "\" -d \"" + data + "\" --scenes 99" + common).code, 2);
  EXPECT_EQ(cli("plot -m \"" + ckpt + "\" -d \"" + data + "\" --scenes 0,2" + common).code, 0);
  EXPECT_TRUE(fs::exists(dir / "scene_0.svg"));
  EXPECT_TRUE(fs::exists(dir / "scene_2.svg"));
}

TEST(Cli, OutputDirectoryPrecedence)
{
  const fs::path from_env = scratch("from_env");
  const fs::path from_flag = scratch("from_flag");
  const fs::path from_file = scratch("from_file");
  const fs::path cfg = scratch("outdir.json");
  std::ofstream(cfg) << nlohmann::json{{"out_dir", from_file.string()}}.dump();
  const std::string env = "LANELOSS_OUT_DIR=\"" + from_env.string() + "\"";

  EXPECT_EQ(cli("generate -n 1 -c \"" + cfg.string() + "\"").code, 0);
  EXPECT_TRUE(fs::exists(from_file / "dataset.jsonl"));
  EXPECT_EQ(cli("generate -n 1 -c \"" + cfg.string() + "\"", env).code, 0);
  EXPECT_TRUE(fs::exists(from_env / "dataset.jsonl"));
  EXPECT_EQ(cli("generate -n 1 -c \"" + cfg.string() + "\" -o \"" + from_flag.string() + "\"", env).code, 0);
  EXPECT_TRUE(fs::exists(from_flag / "dataset.jsonl"));
}

TEST(Cli, ResumeExtendsTraining)
{
  const fs::path dir = scratch("cli_resume");
  const fs::path cfg = scratch("resume_cfg.json");
  std::ofstream(cfg) << R"({"model": {"d": 8, "heads": 2, "k": 2, "modes": 2, "proposal_width": 8},
                           "train": {"epochs": 2, "batch_size": 4, "lr_decay_epoch": 3}, "eval": {"ks": [2, 1]}})";
  const std::string common = " -o \"" + dir.string() + "\" -c \"" + cfg.string() + "\"";
  ASSERT_EQ(cli("generate -n 8" + common).code, 0);
  const std::string data = (dir / "dataset.jsonl").string();
  ASSERT_EQ(cli("train -d \"" + data + "\" --epochs 4 --name full.json" + common).code, 0);
  ASSERT_EQ(cli("train -d \"" + data + "\" --name part.json" + common).code, 0);
  ASSERT_EQ(cli("train -d \"" + data + "\" --epochs 4 --name part.json --resume \"" + (dir / "part.json").string() + "\"" + common).code, 0);
  const Checkpoint full = load_checkpoint((dir / "full.json").string());
  const Checkpoint part = load_checkpoint((dir / "part.json").string());
  EXPECT_EQ(part.state.epoch, 4u);
  EXPECT_EQ(params_dump(part.model), params_dump(full.model));
}

}  // namespace
}  // namespace laneloss::harness
