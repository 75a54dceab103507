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

#include "fairrank/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include <boost/lexical_cast.hpp>
#include <spdlog/spdlog.h>

#include "fairrank/checkpoint.hpp"
#include "fairrank/trainer.hpp"

namespace fairrank {

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

void check_shapes(const MfParams& params, const InteractionDataset& ds) {
  if (params.num_users() != ds.num_users || params.num_items() != ds.num_items) {
    throw Error("checkpoint dimension mismatch: model has " +
                std::to_string(params.num_users()) + " users x " +
                std::to_string(params.num_items()) + " items, data has " +
                std::to_string(ds.num_users) + " x " + std::to_string(ds.num_items));
  }
}

const GroupCatalog& require_catalog(const ExperimentData& data) {
  if (!data.catalog) throw ConfigError("[data] groups: required for evaluation");
  return *data.catalog;
}

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  ExperimentData out;
  if (config.interactions.empty()) {
    const SyntheticData syn = generate_synthetic(*config.synthetic);
    out.dataset = split(syn.interactions, config.ratios, config.seed);
    out.catalog = syn.catalog;
    return out;
  }
  const RawInteractions raw = load_interactions(config.interactions);
  if (!config.groups.empty()) out.catalog = load_groups(config.groups, raw.item_ids);
  out.dataset = split(raw, config.ratios, config.seed);
  return out;
}

ExperimentConfig load_config_with(const std::filesystem::path& path, const Overrides& o) {
  ExperimentConfig c = load_config(path);
  if (o.seed) c.set_seed(*o.seed);
  if (o.out) c.out = *o.out;
  return c;
}

std::filesystem::path cmd_train(const ExperimentConfig& config) {
  const ExperimentData data = load_experiment_data(config);
  const GroupCatalog* catalog = data.catalog ? &*data.catalog : nullptr;
  spdlog::info("training {} on {} users, {} items, {} train pairs", to_string(config.train.kind),
               data.dataset.num_users, data.dataset.num_items, data.dataset.num_train_pairs());
  const TrainResult result = train(config.train, data.dataset, catalog);

  const std::string hash = config.hash();
  const std::filesystem::path dir = config.out / ("run-" + hash);
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "checkpoint",
                  Checkpoint{to_string(config.train.kind), hash, result.params, result.adversary});
  {
    auto log = open_out(dir / "trainlog.csv");
    result.log.write_csv(log);
  }
  {
    auto cfg = open_out(dir / "config.resolved");
    cfg << config.resolved_text();
  }
  spdlog::info("selected epoch {}; wrote {}", result.selected_epoch, dir.string());
  return dir;
}

FairnessReport cmd_eval(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                        const std::optional<std::filesystem::path>& out_dir) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const ExperimentData data = load_experiment_data(config);
  check_shapes(ckpt.params, data.dataset);
  if (data.dataset.num_test_pairs() == 0) throw Error("dataset has no test split");
  const std::string hash = config.hash();
  if (!ckpt.config_hash.empty() && ckpt.config_hash != hash) {
    spdlog::warn("checkpoint was trained under config {} but evaluated under {}",
                 ckpt.config_hash, hash);
  }
  FairnessReport rep = evaluate(ckpt.params, data.dataset, require_catalog(data), config.eval);
  rep.config_hash = hash;

  const std::filesystem::path dir = out_dir ? *out_dir : checkpoint.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  {
    auto js = open_out(dir / "report.json");
    js << rep.to_json().dump(2) << '\n';
  }
  {
    auto tsv = open_out(dir / "report.tsv");
    rep.write_tsv(tsv, ckpt.model);
  }
  return rep;
}

void cmd_audit(const AuditInputs& in, std::ostream& out) {
  ExperimentData data;
  std::vector<Interaction> all_pairs;
  if (in.data) {
    data = *in.data;
    for (std::size_t u = 0; u < data.dataset.num_users; ++u) {
      for (const auto* s : {&data.dataset.train_pos[u], &data.dataset.val_pos[u],
                            &data.dataset.test_pos[u]}) {
        for (ItemId i : *s) all_pairs.push_back({static_cast<UserId>(u), i});
      }
    }
  } else {
    const RawInteractions raw = load_interactions(in.interactions);
    data.catalog = load_groups(in.groups, raw.item_ids);
    all_pairs = raw.pairs;
    if (in.checkpoint) data.dataset = split(raw, in.ratios, in.seed);
  }
  const GroupCatalog& catalog = require_catalog(data);
  const GroupFeedback fb = group_feedback(all_pairs, catalog);

  std::vector<double> p_rsp;
  std::vector<double> p_reo;
  if (in.checkpoint) {
    const Checkpoint ckpt = load_checkpoint(*in.checkpoint);
    check_shapes(ckpt.params, data.dataset);
    const RankingResult r = rank_topk(ckpt.params, data.dataset, in.k, Exclusion::kTrainVal);
    p_rsp = prob_rsp(r, data.dataset, catalog, Exclusion::kTrain);
    p_reo = prob_reo(r, data.dataset, catalog);
  }

  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << "group\t#item\t#feedback\t#feedback/#item";
  if (in.checkpoint) out << "\tP(R@" << in.k << "|g)\tP(R@" << in.k << "|g,y=1)";
  out << '\n';
  for (std::size_t a = 0; a < catalog.num_groups(); ++a) {
    out << catalog.group_names()[a] << '\t' << fb.items[a] << '\t' << fb.feedback[a] << '\t'
        << std::fixed << std::setprecision(2) << fb.ratio[a];
    if (in.checkpoint) {
      out << std::setprecision(5) << '\t' << p_rsp[a] << '\t' << p_reo[a];
    }
    out << '\n';
  }
  out << std::setprecision(5);
  out << "relative_std\t\t\t" << relative_std(fb.ratio);
  if (in.checkpoint) out << '\t' << relative_std(p_rsp) << '\t' << relative_std(p_reo);
  out << '\n';
  out.flags(old_flags);
  out.precision(old_precision);
}

void cmd_sweep(const ExperimentConfig& config, const std::string& param,
               const std::vector<std::string>& values, std::ostream& out) {
  if (values.size() < 2) throw UsageError("sweep needs at least two values");
  if (param != "alpha" && param != "beta" && param != "adv_layers") {
    throw UsageError("sweep parameter must be alpha, beta or adv_layers, got '" + param + "'");
  }
  if (param != "beta" && !is_dpr(config.train.kind)) {
    throw ConfigError("sweeping " + param + " requires a DPR model");
  }
  std::vector<ExperimentConfig> runs;
  for (const auto& v : values) {
    ExperimentConfig c = config;
    try {
      if (param == "alpha") {
        c.train.weights.alpha = boost::lexical_cast<double>(v);
      } else if (param == "beta") {
        c.train.weights.beta = boost::lexical_cast<double>(v);
      } else {
        if (!v.empty() && v.front() == '-') throw boost::bad_lexical_cast();
        c.train.adv_layers = boost::lexical_cast<std::size_t>(v);
      }
    } catch (const boost::bad_lexical_cast&) {
      throw UsageError("sweep: invalid value '" + v + "' for " + param);
    }
    runs.push_back(std::move(c));
  }

  const ExperimentData data = load_experiment_data(config);
  const GroupCatalog& catalog = require_catalog(data);
  const auto& ks = config.eval.ks;
  const std::size_t k =
      std::find(ks.begin(), ks.end(), 15) != ks.end() ? 15 : *std::max_element(ks.begin(), ks.end());
  const auto old_precision = out.precision(10);
  out << "value\tf1@" << k << "\trsp@" << k << "\treo@" << k
      << "\tjs_user\tjs_group_all\tjs_group_pos\n";
  for (std::size_t n = 0; n < runs.size(); ++n) {
    spdlog::info("sweep {} = {}", param, values[n]);
    const TrainResult r = train(runs[n].train, data.dataset, &catalog);
    const FairnessReport rep = evaluate(r.params, data.dataset, catalog, runs[n].eval);
    out << values[n] << '\t' << rep.f1.at(k) << '\t' << rep.rsp.at(k) << '\t' << rep.reo.at(k)
        << '\t' << rep.js_user << '\t' << rep.js_group_all << '\t' << rep.js_group_pos << '\n';
  }
  out.precision(old_precision);
}

void cmd_synth(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  if (!config.synthetic) throw ConfigError("[synthetic] section required");
  const SyntheticData syn = generate_synthetic(*config.synthetic);
  std::filesystem::create_directories(out_dir);
  write_interactions(out_dir / "interactions.csv", syn.interactions);
  write_groups(out_dir / "groups.csv", syn.catalog, syn.interactions.item_ids);
}

}  // namespace fairrank
