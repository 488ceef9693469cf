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

// Command line entry point: generate | train | eval | ablate | plot.
//
// Exit codes: 0 success, 1 runtime failure (I/O, corrupt input),
// 2 configuration error, 3 numeric divergence during training.

#include "laneloss/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace laneloss;

namespace
{

constexpr const char * kOutDirEnv = "LANELOSS_OUT_DIR";

struct CommonOptions
{
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

// Precedence: --out-dir flag, then LANELOSS_OUT_DIR, then the config file.
harness::RunConfig resolve(const CommonOptions & o)
{
  harness::RunConfig c = o.config_path.empty() ? harness::default_run_config() : harness::load_run_config(o.config_path);
  if (const char * env = std::getenv(kOutDirEnv); env && *env) c.out_dir = env;
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  fs::create_directories(c.out_dir);
  return c;
}

fs::path out_path(const harness::RunConfig & c, const std::string & name)
{
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(c.out_dir) / p;
}

void write_text(const fs::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
}

void write_resolved(const harness::RunConfig & c)
{
  write_text(out_path(c, "resolved_config.json"), harness::to_json(c).dump(2) + "\n");
}

void add_common(CLI::App * cmd, CommonOptions & o, bool with_seed = true)
{
  cmd->add_option("-c,--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("-o,--out-dir", o.out_dir, "output directory (overrides " + std::string(kOutDirEnv) + ")");
  if (with_seed) cmd->add_option("--seed", o.seed, "seed override");
}

std::vector<scenario::Scene> load_scenes(const std::string & path) { return scenario::read_dataset(path); }

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Lane Loss and trajectory proposal attention: data generation, training and evaluation"};
  app.require_subcommand(1);

  CommonOptions gen_opts;
  std::size_t gen_count = 0;
  std::string gen_name = "dataset.jsonl";
  auto * gen = app.add_subcommand("generate", "write a synthetic scene dataset (JSON lines)");
  add_common(gen, gen_opts);
  gen->add_option("-n,--count", gen_count, "number of scenes (default: data.train_scenes)");
  gen->add_option("--name", gen_name, "output file name");

  CommonOptions train_opts;
  std::string train_data;
  std::string train_resume;
  std::string train_name = "checkpoint.json";
  std::optional<std::size_t> train_epochs;
  std::optional<bool> train_lane_loss;
  std::optional<bool> train_tpa;
  auto * tr = app.add_subcommand("train", "train a model on a dataset");
  add_common(tr, train_opts);
  tr->add_option("-d,--data", train_data, "training dataset (JSON lines)")->required()->check(CLI::ExistingFile);
  tr->add_option("--resume", train_resume, "continue from this checkpoint")->check(CLI::ExistingFile);
  tr->add_option("--name", train_name, "checkpoint file name");
  tr->add_option("--epochs", train_epochs, "total epochs");
  tr->add_option("--lane-loss", train_lane_loss, "enable Lane Loss (true/false)");
  tr->add_option("--tpa", train_tpa, "enable trajectory proposal attention (true/false)");

  CommonOptions eval_opts;
  std::string eval_ckpt;
  std::string eval_data;
  std::vector<std::size_t> eval_ks;
  auto * ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev, eval_opts, false);
  ev->add_option("-m,--checkpoint", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("-d,--data", eval_data, "evaluation dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("-k,--k", eval_ks, "top-k values, e.g. -k 6 -k 1")->delimiter(',');

  CommonOptions abl_opts;
  std::vector<std::uint64_t> abl_seeds;
  auto * ab = app.add_subcommand("ablate", "train and evaluate the four ablation variants");
  add_common(ab, abl_opts, false);
  ab->add_option("--seeds", abl_seeds, "ablation seeds (overrides ablation.seeds)")->delimiter(',');

  CommonOptions plot_opts;
  std::string plot_ckpt;
  std::string plot_data;
  std::vector<std::uint64_t> plot_ids;
  auto * pl = app.add_subcommand("plot", "render predictions of selected scenes as SVG");
  add_common(pl, plot_opts, false);
  pl->add_option("-m,--checkpoint", plot_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  pl->add_option("-d,--data", plot_data, "dataset")->required()->check(CLI::ExistingFile);
  pl->add_option("--scenes", plot_ids, "scene ids, e.g. --scenes 0,4,7")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      harness::RunConfig c = resolve(gen_opts);
      if (gen_opts.seed) c.scenario.seed = *gen_opts.seed;
      const std::size_t count = gen_count ? gen_count : c.train_scenes;
      const auto scenes = scenario::generate_dataset(c.scenario, count);
      const fs::path path = out_path(c, gen_name);
      scenario::write_dataset(scenes, path.string());
      write_resolved(c);
      std::vector<metrics::Maneuver> labels;
      for (const auto & s : scenes) labels.push_back(s.maneuver);
      std::cout << "wrote " << scenes.size() << " scenes to " << path.string() << '\n'
                << metrics::to_json(metrics::maneuver_stats(labels)).dump() << '\n';
    } else if (*tr) {
      harness::RunConfig c = resolve(train_opts);
      if (train_opts.seed) c.train.seed = *train_opts.seed;
      if (train_lane_loss) c.train.use_lane_loss = *train_lane_loss;
      if (train_tpa) c.model.use_tpa = *train_tpa;
      if (train_epochs) c.train.epochs = *train_epochs;

      std::optional<harness::Checkpoint> resumed;
      if (!train_resume.empty()) {
        resumed.emplace(harness::load_checkpoint(train_resume));
        // The checkpoint fixes the model and objective; only --epochs may extend it.
        c.model = resumed->model.config();
        c.train = resumed->train;
        if (train_epochs) c.train.epochs = *train_epochs;
      }
      model::Model m = resumed ? std::move(resumed->model) : model::Model(c.model, c.train.seed);
      harness::TrainState state = resumed ? std::move(resumed->state) : harness::TrainState{};
      write_resolved(c);

      const auto scenes = load_scenes(train_data);
      const auto samples = harness::prepare_samples(scenes, c.model, c.train);
      const fs::path ckpt = out_path(c, train_name);
      const fs::path log_path = out_path(c, "train_log.jsonl");
      std::ofstream log(log_path, resumed ? std::ios::app : std::ios::trunc);
      if (!log) throw std::runtime_error("cannot open '" + log_path.string() + "'");
      if (state.epoch >= c.train.epochs) harness::save_checkpoint(ckpt.string(), m, state, c.train);
      harness::train(m, state, samples, c.train, [&](const harness::EpochLog & e, const harness::TrainState & s) {
        const std::string line = harness::to_json(e).dump();
        log << line << '\n' << std::flush;
        std::cout << line << '\n' << std::flush;
        harness::save_checkpoint(ckpt.string(), m, s, c.train);
      });
      std::cout << "checkpoint " << ckpt.string() << " (" << state.epoch << " epochs)\n";
    } else if (*ev) {
      harness::RunConfig c = resolve(eval_opts);
      if (!eval_ks.empty()) c.eval.ks = eval_ks;
      const harness::Checkpoint ck = harness::load_checkpoint(eval_ckpt);
      for (std::size_t k : c.eval.ks) {
        if (k < 1 || k > ck.model.config().modes) throw harness::ConfigError("k must lie in [1, modes]");
      }
      c.model = ck.model.config();
      c.train = ck.train;
      write_resolved(c);
      const auto samples = harness::prepare_samples(load_scenes(eval_data), ck.model.config(), ck.train);
      const harness::EvalReport report = harness::evaluate(ck.model, samples, c.eval);
      write_text(out_path(c, "report.json"), harness::to_json(report).dump(2) + "\n");
      const std::string table = harness::format_report(report);
      write_text(out_path(c, "report.txt"), table);
      std::cout << table;
    } else if (*ab) {
      harness::RunConfig c = resolve(abl_opts);
      if (!abl_seeds.empty()) c.ablation_seeds = abl_seeds;
      write_resolved(c);
      std::vector<harness::AblationRow> rows;
      for (std::uint64_t seed : c.ablation_seeds) {
        auto part = harness::run_ablation(c, seed, harness::ablation_variants(), [](const std::string & line) {
          std::cerr << line << '\n';
        });
        for (auto & r : part) rows.push_back(std::move(r));
      }
      write_text(out_path(c, "ablation.json"), harness::ablation_to_json(rows).dump(2) + "\n");
      const std::string table = harness::format_ablation(rows);
      write_text(out_path(c, "ablation.txt"), table);
      std::cout << table;
    } else if (*pl) {
      harness::RunConfig c = resolve(plot_opts);
      const harness::Checkpoint ck = harness::load_checkpoint(plot_ckpt);
      const auto scenes = load_scenes(plot_data);
      for (std::uint64_t id : plot_ids) {
        const auto it = std::find_if(scenes.begin(), scenes.end(), [&](const auto & s) { return s.id == id; });
        if (it == scenes.end()) throw harness::ConfigError("scene id " + std::to_string(id) + " not in dataset");
        const auto sample = harness::prepare_sample(*it, ck.model.config(), ck.train);
        const fs::path path = out_path(c, "scene_" + std::to_string(id) + ".svg");
        write_text(path, harness::render_svg(*it, harness::predict(ck.model, sample)));
        std::cout << path.string() << '\n';
      }
    }
  } catch (const harness::ConfigError & e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const harness::DivergenceError & e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
