/*
 * Copyright 2026 The FairRank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fairrank/experiment.hpp"

namespace {

using fairrank::Overrides;

int run(int argc, char** argv) {
  CLI::App app{"Fairness-aware personalized ranking experiments"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  std::string config;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* c = cmd->add_option("--config", config, "experiment config (INI)");
    if (config_required) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", seed, "overrides [run] seed");
  };

  auto* train = app.add_subcommand("train", "train the configured model");
  add_common(train, true);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, true);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  auto* audit = app.add_subcommand("audit", "per-group data and ranking imbalance");
  add_common(audit, false);
  std::string interactions;
  std::string groups;
  std::size_t audit_k = 15;
  audit->add_option("--interactions", interactions, "interactions CSV");
  audit->add_option("--groups", groups, "groups CSV");
  audit->add_option("--checkpoint", checkpoint, "optional checkpoint");
  audit->add_option("--k", audit_k, "ranking cutoff")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "hyper-parameter sweep");
  add_common(sweep, true);
  std::string param;
  std::vector<std::string> values;
  sweep->add_option("--param", param, "alpha|beta|adv_layers")
      ->required()
      ->check(CLI::IsMember({"alpha", "beta", "adv_layers"}));
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

  auto* synth = app.add_subcommand("synth", "write synthetic interactions.csv and groups.csv");
  add_common(synth, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto level = spdlog::level::from_str(log_level);
  auto logger = spdlog::stderr_color_mt("fairrank");
  spdlog::set_default_logger(logger);
  spdlog::set_level(level);

  Overrides ov;
  ov.seed = seed;
  if (!out.empty()) ov.out = out;

  if (train->parsed()) {
    const auto dir = fairrank::cmd_train(fairrank::load_config_with(config, ov));
    std::cout << dir.string() << '\n';
  } else if (eval->parsed()) {
    const auto cfg = fairrank::load_config_with(config, ov);
    std::optional<std::filesystem::path> dir;
    if (ov.out) dir = *ov.out;
    const auto rep = fairrank::cmd_eval(cfg, checkpoint, dir);
    std::cout << rep.to_json().dump(2) << '\n';
  } else if (audit->parsed()) {
    fairrank::AuditInputs in;
    in.k = audit_k;
    if (!checkpoint.empty()) in.checkpoint = checkpoint;
    if (!config.empty()) {
      const auto cfg = fairrank::load_config_with(config, ov);
      in.ratios = cfg.ratios;
      in.seed = cfg.seed;
      if (interactions.empty() && groups.empty()) in.data = fairrank::load_experiment_data(cfg);
      if (interactions.empty()) interactions = cfg.interactions.string();
      if (groups.empty()) groups = cfg.groups.string();
    } else if (ov.seed) {
      in.seed = *ov.seed;
    }
    if (!in.data && (interactions.empty() || groups.empty())) {
      throw fairrank::UsageError("audit needs --interactions and --groups, or --config");
    }
    in.interactions = interactions;
    in.groups = groups;
    fairrank::cmd_audit(in, std::cout);
  } else if (sweep->parsed()) {
    const auto cfg = fairrank::load_config_with(config, ov);
    if (ov.out) {
      std::filesystem::create_directories(*ov.out);
      std::ofstream f(*ov.out / "sweep.tsv");
      if (!f) throw fairrank::Error("cannot write " + (*ov.out / "sweep.tsv").string());
      fairrank::cmd_sweep(cfg, param, values, f);
    } else {
      fairrank::cmd_sweep(cfg, param, values, std::cout);
    }
  } else if (synth->parsed()) {
    const auto cfg = fairrank::load_config_with(config, ov);
    const std::filesystem::path dir = ov.out ? *ov.out : std::filesystem::path("synthetic");
    fairrank::cmd_synth(cfg, dir);
    std::cout << dir.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fairrank::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const fairrank::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
