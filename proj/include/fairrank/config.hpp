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

#ifndef FAIRRANK_CONFIG_HPP_
#define FAIRRANK_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "fairrank/data.hpp"
#include "fairrank/evaluation.hpp"
#include "fairrank/trainer.hpp"

namespace fairrank {

// Experiment configuration read from an INI file:
//
//   [data]      interactions, groups, split = 0.6,0.2,0.2
//   [synthetic] users, items, shares, popularity, interactions_per_user,
//               topics, personal_fraction
//   [train]     model, dim, lr, adv_lr, lambda_theta, alpha, beta,
//               lambda_model, gamma, negative_rate, batch_size, epochs,
//               pretrain_epochs, adv_layers, adv_hidden,
//               theta_batches_per_round, eval_every, checkpoint_select,
//               record_wall_time
//   [eval]      ks = 5,10,15, user_pairs, bins
//   [run]       seed, out
//
// Relative paths resolve against the config file's directory. Without
// `interactions`, a [synthetic] section generates the data in memory.
struct ExperimentConfig {
  std::filesystem::path interactions;
  std::filesystem::path groups;
  SplitRatios ratios;
  std::optional<SyntheticSpec> synthetic;
  TrainConfig train;
  EvalOptions eval;
  std::uint64_t seed = 42;
  std::filesystem::path out = "runs";

  // Canonical INI text of every resolved setting except `out`.
  std::string resolved_text() const;
  // 16 hex digits of FNV-1a over resolved_text().
  std::string hash() const;
  // Applies `seed` to the training, split, evaluation and synthetic streams.
  void set_seed(std::uint64_t s);
};

ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

std::string fnv1a_hex(const std::string& text);

}  // namespace fairrank

#endif  // FAIRRANK_CONFIG_HPP_
