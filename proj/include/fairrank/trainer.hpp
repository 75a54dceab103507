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

#ifndef FAIRRANK_TRAINER_HPP_
#define FAIRRANK_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fairrank/adversary.hpp"
#include "fairrank/data.hpp"
#include "fairrank/mf_model.hpp"
#include "fairrank/objectives.hpp"

namespace fairrank {

enum class ModelKind { kBpr, kDprRsp, kDprReo, kFatr, kRegRsp, kRegReo };

std::string to_string(ModelKind kind);
// Accepts "BPR", "DPR-RSP", "DPR-REO", "FATR", "Reg-RSP", "Reg-REO"
// (case-insensitive).
ModelKind parse_model_kind(const std::string& name);

inline bool is_dpr(ModelKind k) { return k == ModelKind::kDprRsp || k == ModelKind::kDprReo; }
inline bool is_reg(ModelKind k) { return k == ModelKind::kRegRsp || k == ModelKind::kRegReo; }
// Variants whose fairness target covers every scored pair (RSP) rather than
// positives only (REO).
inline bool targets_all_pairs(ModelKind k) {
  return k == ModelKind::kDprRsp || k == ModelKind::kRegRsp;
}

enum class CheckpointSelect { kBest, kLast };

struct TrainConfig {
  ModelKind kind = ModelKind::kBpr;
  std::size_t dim = 32;
  double lr = 1e-3;      // eta_BPR
  double adv_lr = 1e-3;  // eta_Adv
  ObjectiveWeights weights;
  std::size_t negative_rate = 5;
  std::size_t batch_size = 1024;  // positive pairs per mini-batch
  std::size_t epochs = 30;        // total Theta epochs, pretraining included
  std::size_t pretrain_epochs = 10;
  std::size_t adv_layers = 4;  // hidden layers
  std::size_t adv_hidden = 50;
  // Theta mini-batches per adversary sweep; 1 is the literal alternation.
  std::size_t theta_batches_per_round = 1;
  std::size_t eval_every = 1;
  CheckpointSelect checkpoint_select = CheckpointSelect::kBest;
  bool record_wall_time = false;
  std::uint64_t seed = 42;

  // Throws ConfigError. `catalog` may be null only for BPR.
  void validate(const GroupCatalog* catalog) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_bpr = 0.0;
  double loss_adv = 0.0;
  double loss_kl = 0.0;
  std::optional<double> val_f1_15;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  MfParams params;
  std::optional<AdversaryParams> adversary;
  TrainLog log;
  std::size_t selected_epoch = 0;
  std::vector<std::size_t> psi_samples_per_sweep;
};

// One (u, i, j) training triple.
struct Triple {
  UserId u;
  ItemId i;
  ItemId j;
};

struct BatchLosses {
  double bpr = 0.0;    // mean pair loss
  double l2 = 0.0;
  double adv = 0.0;    // weighted adversary log-likelihood seen by Theta
  double kl = 0.0;     // mean per-user KL
  double model = 0.0;  // FATR or Reg penalty (unweighted)
  double total = 0.0;
};

struct StepOptions {
  bool pretrain = false;   // plain BPR step
  bool bpr_term = true;    // disable to isolate the other terms
};

struct TrainHooks {
  // Called after every epoch with the synchronised parameters.
  std::function<void(std::size_t epoch, const MfParams&)> on_epoch_end;
};

// Shared training loop for every model kind.
class Trainer {
 public:
  Trainer(TrainConfig config, const InteractionDataset& dataset, const GroupCatalog* catalog);

  TrainResult run(const TrainHooks& hooks = {});

  // One Theta update on explicit triples; `positives` lists the distinct
  // positive pairs the triples expand from, in batch order.
  BatchLosses theta_step(std::span<const Interaction> positives,
                         std::span<const Triple> triples, const StepOptions& options);
  // Loss terms of the step above at the current parameters, no update.
  BatchLosses theta_losses(std::span<const Interaction> positives,
                           std::span<const Triple> triples, const StepOptions& options);

  // One full adversary pass; returns the sample-weighted mean log-likelihood.
  double psi_sweep();

  MfParams& params() { return params_; }
  AdversaryParams& adversary() { return psi_; }
  const std::vector<std::size_t>& psi_samples_per_sweep() const { return sweep_samples_; }

 private:
  BatchLosses batch_objective(std::span<const Interaction> positives,
                              std::span<const Triple> triples, const StepOptions& options,
                              bool apply);
  double validation_f1() const;

  TrainConfig cfg_;
  const InteractionDataset& ds_;
  const GroupCatalog* catalog_;
  MfParams params_;
  AdversaryParams psi_;
  AdamState user_adam_;
  AdamState item_adam_;
  AdversaryOptimizer psi_opt_;
  Rng theta_rng_;
  Rng psi_rng_;
  RowGradient user_grad_;
  RowGradient item_grad_;
  std::vector<Interaction> train_pairs_;
  std::vector<std::size_t> sweep_samples_;
  std::size_t high_adv_streak_ = 0;
  std::size_t degenerate_batches_ = 0;
};

inline TrainResult train(const TrainConfig& config, const InteractionDataset& dataset,
                         const GroupCatalog* catalog, const TrainHooks& hooks = {}) {
  return Trainer(config, dataset, catalog).run(hooks);
}

// Seeds for independent RNG streams derived from one base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace fairrank

#endif  // FAIRRANK_TRAINER_HPP_
