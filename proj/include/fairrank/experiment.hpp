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

#ifndef FAIRRANK_EXPERIMENT_HPP_
#define FAIRRANK_EXPERIMENT_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fairrank/config.hpp"
#include "fairrank/data.hpp"
#include "fairrank/evaluation.hpp"

namespace fairrank {

struct ExperimentData {
  InteractionDataset dataset;
  std::optional<GroupCatalog> catalog;
};

// Loads (or generates) and splits the configured data.
ExperimentData load_experiment_data(const ExperimentConfig& config);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

ExperimentConfig load_config_with(const std::filesystem::path& path, const Overrides& o);

// Trains and writes checkpoint, trainlog.csv and config.resolved into
// <out>/run-<hash>/. Returns that directory.
std::filesystem::path cmd_train(const ExperimentConfig& config);

// Evaluates a checkpoint on the configured data and writes report.json and
// report.tsv into `out_dir` (default: the checkpoint's directory).
FairnessReport cmd_eval(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                        const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct AuditInputs {
  std::filesystem::path interactions;
  std::filesystem::path groups;
  std::optional<ExperimentData> data;  // used instead of the files when set
  std::optional<std::filesystem::path> checkpoint;
  SplitRatios ratios;
  std::uint64_t seed = 42;
  std::size_t k = 15;
};

// Per-group #item, #feedback, #feedback/#item and its relative std; with a
// checkpoint, also the per-group ranking probabilities at k.
void cmd_audit(const AuditInputs& inputs, std::ostream& out);

// Trains and evaluates one model per value of `param` (alpha, beta or
// adv_layers) and writes one TSV row per value.
void cmd_sweep(const ExperimentConfig& config, const std::string& param,
               const std::vector<std::string>& values, std::ostream& out);

// Writes interactions.csv and groups.csv generated from the [synthetic]
// section into `out_dir`.
void cmd_synth(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace fairrank

#endif  // FAIRRANK_EXPERIMENT_HPP_
