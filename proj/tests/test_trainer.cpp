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


#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "fairrank/evaluation.hpp"
#include "fairrank/trainer.hpp"
#include "test_util.hpp"

namespace fairrank {
namespace {

using testing::make_catalog;
using testing::make_dataset;

struct SynthData {
  InteractionDataset dataset;
  GroupCatalog catalog;
};

SynthData synth(std::size_t users, std::size_t items, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.num_users = users;
  spec.num_items = items;
  spec.interactions_per_user = 20;
  spec.num_topics = 8;
  spec.personal_fraction = 0.5;
  spec.seed = seed;
  SyntheticData s = generate_synthetic(spec);
  return {split(s.interactions, {}, seed), s.catalog};
}

const SynthData& shared_synth() {
  static const SynthData data = synth(600, 120, 5);
  return data;
}

TrainConfig bpr_config() {
  TrainConfig c;
  c.dim = 8;
  c.lr = 0.01;
  c.weights.lambda_theta = 0.01;
  c.batch_size = 256;
  c.epochs = 3;
  c.seed = 7;
  return c;
}

TEST(ModelKind, ParseAndPrint) {
  for (auto k : {ModelKind::kBpr, ModelKind::kDprRsp, ModelKind::kDprReo, ModelKind::kFatr,
                 ModelKind::kRegRsp, ModelKind::kRegReo}) {
    EXPECT_EQ(parse_model_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_model_kind("dpr-reo"), ModelKind::kDprReo);
  EXPECT_THROW(parse_model_kind("SVD"), ConfigError);
}

TEST(TrainConfig, ValidationErrors) {
  GroupCatalog three = make_catalog(3, {{0}, {1}, {2}});
  GroupCatalog two = make_catalog(2, {{0}, {1}, {1}});
  TrainConfig c = bpr_config();
  EXPECT_NO_THROW(c.validate(nullptr));
  c.dim = 0;
  EXPECT_THROW(c.validate(nullptr), ConfigError);
  c = bpr_config();
  c.kind = ModelKind::kDprRsp;
  EXPECT_THROW(c.validate(nullptr), ConfigError);
  EXPECT_NO_THROW(c.validate(&three));
  c.kind = ModelKind::kFatr;
  c.dim = 3;
  try {
    c.validate(&three);
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("FATR requires num_groups"), std::string::npos);
  }
  c.dim = 4;
  EXPECT_NO_THROW(c.validate(&three));
  for (auto k : {ModelKind::kRegRsp, ModelKind::kRegReo}) {
    c.kind = k;
    EXPECT_THROW(c.validate(&three), ConfigError);
    EXPECT_NO_THROW(c.validate(&two));
  }
}

TEST(TrainBpr, SingleUserLearnsItsPositive) {
  InteractionDataset ds = make_dataset(2, {{0}});
  TrainConfig c = bpr_config();
  c.epochs = 200;
  c.negative_rate = 1;
  c.batch_size = 1;
  TrainResult r = train(c, ds, nullptr);
  EXPECT_GT(score(r.params, 0, 0), score(r.params, 0, 1));
  EXPECT_EQ(r.log.epochs.size(), 200u);
  EXPECT_FALSE(r.log.epochs.back().val_f1_15.has_value());
}

TEST(TrainBpr, ValidationF1FarAboveUntrained) {
  const SynthData d = synth(1000, 400, 6);
  TrainConfig c = bpr_config();
  c.dim = 16;
  c.epochs = 20;
  c.batch_size = 128;
  auto val_f1 = [&](const MfParams& p) {
    return f1_at_k(rank_topk(p, d.dataset, 15, Exclusion::kTrain), d.dataset.val_pos, 15);
  };
  const double untrained = val_f1(init_params(d.dataset.num_users, d.dataset.num_items, c.dim, c.seed));
  TrainResult r = train(c, d.dataset, nullptr);
  const double trained = val_f1(r.params);
  EXPECT_GE(trained, 5.0 * untrained) << "trained " << trained << " untrained " << untrained;
  ASSERT_TRUE(r.log.epochs[r.selected_epoch - 1].val_f1_15.has_value());
  EXPECT_DOUBLE_EQ(*r.log.epochs[r.selected_epoch - 1].val_f1_15, trained);
}

TEST(TrainBpr, DeterministicGivenSeed) {
  const auto& d = shared_synth();
  TrainConfig c = bpr_config();
  TrainResult a = train(c, d.dataset, nullptr);
  TrainResult b = train(c, d.dataset, nullptr);
  EXPECT_TRUE(a.params == b.params);
  std::ostringstream la, lb;
  a.log.write_csv(la);
  b.log.write_csv(lb);
  EXPECT_EQ(la.str(), lb.str());
  c.seed = 8;
  EXPECT_FALSE(train(c, d.dataset, nullptr).params == a.params);
}

TEST(TrainLog, CsvLayout) {
  TrainLog log;
  EpochRecord r;
  r.epoch = 1;
  r.loss_bpr = 0.5;
  log.epochs.push_back(r);
  r.epoch = 2;
  r.val_f1_15 = 0.25;
  log.epochs.push_back(r);
  std::ostringstream out;
  log.write_csv(out);
  EXPECT_EQ(out.str(),
            "epoch,loss_bpr,loss_adv,loss_kl,val_f1_15,seconds\n"
            "1,0.5,0,0,,0\n"
            "2,0.5,0,0,0.25,0\n");
}

TEST(TrainBpr, CheckpointSelection) {
  const auto& d = shared_synth();
  TrainConfig c = bpr_config();
  c.epochs = 4;
  TrainResult best = train(c, d.dataset, nullptr);
  double best_f1 = -1.0;
  std::size_t best_epoch = 0;
  for (const auto& e : best.log.epochs) {
    if (*e.val_f1_15 > best_f1) {
      best_f1 = *e.val_f1_15;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(best.selected_epoch, best_epoch);
  c.checkpoint_select = CheckpointSelect::kLast;
  EXPECT_EQ(train(c, d.dataset, nullptr).selected_epoch, 4u);
}

TrainConfig dpr_config(ModelKind kind) {
  TrainConfig c = bpr_config();
  c.kind = kind;
  c.adv_layers = 1;
  c.adv_hidden = 8;
  c.pretrain_epochs = 1;
  c.theta_batches_per_round = 2;
  c.weights.alpha = 1.0;
  c.weights.beta = 0.5;
  return c;
}

TEST(TrainDpr, ReducesToBprWithZeroWeights) {
  const auto& d = shared_synth();
  for (auto kind : {ModelKind::kDprRsp, ModelKind::kDprReo}) {
    TrainConfig c = dpr_config(kind);
    c.weights.alpha = 0.0;
    c.weights.beta = 0.0;
    c.epochs = 5;
    c.pretrain_epochs = 2;
    std::vector<MfParams> dpr_traj, bpr_traj;
    train(c, d.dataset, &d.catalog,
          {[&](std::size_t, const MfParams& p) { dpr_traj.push_back(p); }});
    TrainConfig b = c;
    b.kind = ModelKind::kBpr;
    train(b, d.dataset, nullptr, {[&](std::size_t, const MfParams& p) { bpr_traj.push_back(p); }});
    ASSERT_EQ(dpr_traj.size(), 5u);
    for (std::size_t e = 0; e < 5; ++e) {
      EXPECT_TRUE(dpr_traj[e] == bpr_traj[e]) << to_string(kind) << " epoch " << e + 1;
    }
  }
}

TEST(TrainDpr, PretrainEqualsPlainBpr) {
  const auto& d = shared_synth();
  TrainConfig c = dpr_config(ModelKind::kDprRsp);
  c.epochs = 4;
  c.pretrain_epochs = 3;
  std::vector<MfParams> dpr_traj, bpr_traj;
  train(c, d.dataset, &d.catalog, {[&](std::size_t, const MfParams& p) { dpr_traj.push_back(p); }});
  TrainConfig b = bpr_config();
  b.epochs = 3;
  train(b, d.dataset, nullptr, {[&](std::size_t, const MfParams& p) { bpr_traj.push_back(p); }});
  EXPECT_TRUE(dpr_traj[2] == bpr_traj[2]);
  EXPECT_FALSE(dpr_traj[3] == bpr_traj[2]);
}

TEST(TrainDpr, SweepSampleCounts) {
  const auto& d = shared_synth();
  const std::size_t positives = d.dataset.num_train_pairs();
  TrainConfig c = dpr_config(ModelKind::kDprReo);
  c.epochs = 2;
  TrainResult reo = train(c, d.dataset, &d.catalog);
  const std::size_t batches = (positives + c.batch_size - 1) / c.batch_size;
  const std::size_t rounds = (batches + c.theta_batches_per_round - 1) / c.theta_batches_per_round;
  ASSERT_EQ(reo.psi_samples_per_sweep.size(), rounds);  // epoch 1 is pretraining
  for (auto n : reo.psi_samples_per_sweep) EXPECT_EQ(n, positives);
  c.kind = ModelKind::kDprRsp;
  TrainResult rsp = train(c, d.dataset, &d.catalog);
  for (auto n : rsp.psi_samples_per_sweep) EXPECT_EQ(n, 2 * positives);
  EXPECT_TRUE(rsp.adversary.has_value());
}

TEST(TrainDpr, NoSweepsWithoutAdversaryWeight) {
  const auto& d = shared_synth();
  TrainConfig c = dpr_config(ModelKind::kDprRsp);
  c.weights.alpha = 0.0;
  EXPECT_TRUE(train(c, d.dataset, &d.catalog).psi_samples_per_sweep.empty());
}

// Positive pairs and their triples from the first training pairs of the data.
void first_batch(const InteractionDataset& ds, std::size_t n, std::vector<Interaction>& pos,
                 std::vector<Triple>& triples, std::uint64_t seed) {
  Rng rng(seed);
  auto pairs = ds.train_pairs();
  pos.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n));
  triples.clear();
  for (const auto& p : pos) {
    for (int r = 0; r < 3; ++r) triples.push_back({p.user, p.item, sample_negative(ds, p.user, rng)});
  }
}

TEST(TrainDpr, ThetaStepDescendsAdversaryLikelihood) {
  const auto& d = shared_synth();
  for (auto kind : {ModelKind::kDprRsp, ModelKind::kDprReo}) {
    TrainConfig c = dpr_config(kind);
    c.weights.alpha = 1.0;
    c.weights.beta = 0.0;
    c.weights.lambda_theta = 0.0;
    c.lr = 1e-3;
    c.pretrain_epochs = 0;
    Trainer t(c, d.dataset, &d.catalog);
    for (int s = 0; s < 3; ++s) t.psi_sweep();  // a non-trivial adversary
    std::vector<Interaction> pos;
    std::vector<Triple> triples;
    first_batch(d.dataset, 64, pos, triples, 1);
    StepOptions opt;
    opt.bpr_term = false;
    const double before = t.theta_losses(pos, triples, opt).adv;
    const AdversaryParams psi = t.adversary();
    t.theta_step(pos, triples, opt);
    const double after = t.theta_losses(pos, triples, opt).adv;
    EXPECT_TRUE(t.adversary() == psi);
    EXPECT_LT(after, before) << to_string(kind);
  }
}

TEST(TrainDpr, KlTermReportedAndWeighted) {
  const auto& d = shared_synth();
  TrainConfig c = dpr_config(ModelKind::kDprRsp);
  c.weights.alpha = 0.0;
  c.weights.beta = 2.0;
  c.weights.lambda_theta = 0.0;
  c.pretrain_epochs = 0;
  Trainer t(c, d.dataset, &d.catalog);
  std::vector<Interaction> pos;
  std::vector<Triple> triples;
  first_batch(d.dataset, 40, pos, triples, 2);
  BatchLosses l = t.theta_losses(pos, triples, {});
  EXPECT_GT(l.kl, 0.0);
  EXPECT_NEAR(l.total, l.bpr + 2.0 * l.kl, 1e-12);
  StepOptions pre;
  pre.pretrain = true;
  EXPECT_EQ(t.theta_losses(pos, triples, pre).kl, 0.0);
}

TEST(Trainer, DivergenceGuard) {
  const auto& d = shared_synth();
  Trainer t(bpr_config(), d.dataset, nullptr);
  std::vector<Interaction> pos;
  std::vector<Triple> triples;
  first_batch(d.dataset, 4, pos, triples, 3);
  t.params().user_factors(pos[0].user, 0) = std::numeric_limits<double>::infinity();
  try {
    t.theta_step(pos, triples, {});
    FAIL() << "expected divergence error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos);
  }
}

TEST(TrainFatr, ZeroWeightStepIsBprStepWithFrozenBlock) {
  // One user, three items; groups {0}, {1}, {0, 1}.
  InteractionDataset ds = make_dataset(3, {{0}});
  GroupCatalog cat = make_catalog(2, {{0}, {1}, {0, 1}});
  TrainConfig c = bpr_config();
  c.kind = ModelKind::kFatr;
  c.dim = 4;
  c.weights.lambda_model = 0.0;
  c.weights.lambda_theta = 0.0;
  c.weights.gamma = 0.0;
  Trainer t(c, ds, &cat);
  const MfParams before = t.params();
  std::vector<Interaction> pos{{0, 0}};
  std::vector<Triple> triples{{0, 0, 2}};
  t.theta_step(pos, triples, {});
  const MfParams& after = t.params();

  // First Adam step: each updated coordinate moves by -lr * sign(g).
  const double y_ui = before.user_factors.row(0).dot(before.item_factors.row(0));
  const double y_uj = before.user_factors.row(0).dot(before.item_factors.row(2));
  const double s = 1.0 / (1.0 + std::exp(y_ui - y_uj));  // 1 - sigmoid(y_ui - y_uj)
  auto step = [&](double g) { return -c.lr * g / (std::abs(g) + 1e-8); };
  for (int k = 0; k < 4; ++k) {
    const double g_u = -s * before.item_factors(0, k) + s * before.item_factors(2, k);
    EXPECT_NEAR(after.user_factors(0, k), before.user_factors(0, k) + step(g_u), 1e-15);
  }
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(after.item_factors(0, k), before.item_factors(0, k) + step(-s * before.user_factors(0, k)), 1e-15);
    EXPECT_NEAR(after.item_factors(2, k), before.item_factors(2, k) + step(s * before.user_factors(0, k)), 1e-15);
    EXPECT_EQ(after.item_factors(1, k), before.item_factors(1, k));
  }
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 2; ++a) EXPECT_EQ(after.item_factors(i, 2 + a), cat.member(i, a) ? 1.0 : 0.0);
  }
}

TEST(TrainFatr, IndicatorBlockStaysFrozenAndPenaltyShrinks) {
  const auto& d = shared_synth();
  TrainConfig c = bpr_config();
  c.kind = ModelKind::kFatr;
  c.weights.lambda_model = 1.0;
  c.epochs = 5;
  TrainResult r = train(c, d.dataset, &d.catalog);
  const auto f = static_cast<Eigen::Index>(r.params.free_item_dims());
  for (ItemId i = 0; i < d.dataset.num_items; ++i) {
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_EQ(r.params.item_factors(i, f + static_cast<Eigen::Index>(a)),
                d.catalog.member(i, a) ? 1.0 : 0.0);
    }
  }
  TrainConfig free = c;
  free.weights.lambda_model = 0.0;
  TrainResult r0 = train(free, d.dataset, &d.catalog);
  auto penalty = [&](const MfParams& p) {
    const auto m = p.item_factors.rows();
    return fatr_reg(p.item_factors.block(0, 0, m, f), p.item_factors.block(0, f, m, 2)).loss;
  };
  EXPECT_LT(penalty(r.params), penalty(r0.params));
}

TEST(TrainReg, DegenerateBatchContributesNothing) {
  const auto& d = shared_synth();
  TrainConfig c = bpr_config();
  c.kind = ModelKind::kRegRsp;
  c.weights.lambda_model = 5.0;
  Trainer t(c, d.dataset, &d.catalog);
  // A batch whose positives and negatives all sit in group 0 only.
  std::vector<Interaction> pos;
  std::vector<Triple> triples;
  for (const auto& p : d.dataset.train_pairs()) {
    if (!d.catalog.member(p.item, 0) || d.catalog.member(p.item, 1)) continue;
    ItemId j = 0;
    while (d.dataset.in_train(p.user, j) || !d.catalog.member(j, 0) || d.catalog.member(j, 1)) ++j;
    pos.push_back(p);
    triples.push_back({p.user, p.item, j});
    if (pos.size() == 8) break;
  }
  ASSERT_EQ(pos.size(), 8u);
  BatchLosses l = t.theta_losses(pos, triples, {});
  EXPECT_EQ(l.model, 0.0);
  EXPECT_NEAR(l.total, l.bpr + l.l2, 1e-15);
  const MfParams before = t.params();
  t.theta_step(pos, triples, {});
  // Same update as a BPR trainer started from the same parameters.
  TrainConfig b = c;
  b.kind = ModelKind::kBpr;
  Trainer tb(b, d.dataset, nullptr);
  tb.params() = before;
  tb.theta_step(pos, triples, {});
  EXPECT_TRUE(tb.params() == t.params());
}

double mean_gap(const MfParams& p, const SynthData& d) {
  double s[2] = {0, 0}, n[2] = {0, 0};
  for (UserId u = 0; u < d.dataset.num_users; ++u) {
    auto scores = score_all(p, u);
    for (ItemId i = 0; i < d.dataset.num_items; ++i) {
      if (d.dataset.in_train(u, i)) continue;
      for (std::size_t a = 0; a < 2; ++a) {
        if (d.catalog.member(i, a)) {
          s[a] += scores[i];
          n[a] += 1;
        }
      }
    }
  }
  return std::abs(s[0] / n[0] - s[1] / n[1]);
}

TEST(TrainReg, RegRspShrinksGroupMeanGap) {
  const auto& d = shared_synth();
  TrainConfig c = bpr_config();
  c.dim = 16;
  c.epochs = 10;
  c.checkpoint_select = CheckpointSelect::kLast;
  const double bpr_gap = mean_gap(train(c, d.dataset, nullptr).params, d);
  c.kind = ModelKind::kRegRsp;
  c.weights.lambda_model = 1.0;
  const double reg_gap = mean_gap(train(c, d.dataset, &d.catalog).params, d);
  EXPECT_LE(reg_gap, 0.7 * bpr_gap) << "BPR " << bpr_gap << " Reg-RSP " << reg_gap;
}

}  // namespace
}  // namespace fairrank
