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

#include "fairrank/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>

#include <boost/algorithm/string/case_conv.hpp>
#include <spdlog/spdlog.h>

#include "fairrank/evaluation.hpp"
#include "fairrank/kernels.hpp"

namespace fairrank {

namespace {

constexpr std::uint64_t kThetaStream = 1;
constexpr std::uint64_t kPsiStream = 2;
constexpr std::size_t kCollapseSweeps = 5;
constexpr std::size_t kValidationK = 15;

struct KindName {
  ModelKind kind;
  const char* name;
};
constexpr KindName kKindNames[] = {
    {ModelKind::kBpr, "BPR"},       {ModelKind::kDprRsp, "DPR-RSP"},
    {ModelKind::kDprReo, "DPR-REO"}, {ModelKind::kFatr, "FATR"},
    {ModelKind::kRegRsp, "Reg-RSP"}, {ModelKind::kRegReo, "Reg-REO"},
};

void add_scaled(std::span<double> dst, const double* src, double f) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += f * src[k];
}

double squared_norm(const double* x, std::size_t n) { return dot(x, x, n); }

}  // namespace

std::string to_string(ModelKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  const std::string lower = boost::algorithm::to_lower_copy(name);
  for (const auto& kn : kKindNames) {
    if (boost::algorithm::to_lower_copy(std::string(kn.name)) == lower) return kn.kind;
  }
  throw ConfigError("model: unknown kind '" + name +
                    "' (expected BPR, DPR-RSP, DPR-REO, FATR, Reg-RSP or Reg-REO)");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finaliser over base + stream * golden gamma.
  std::uint64_t z = base + stream * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void TrainConfig::validate(const GroupCatalog* catalog) const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(dim >= 1, "dim must be >= 1");
  require(lr > 0.0, "lr must be > 0");
  require(negative_rate >= 1, "negative_rate must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(weights.lambda_theta >= 0.0, "lambda_theta must be >= 0");
  require(weights.alpha >= 0.0, "alpha must be >= 0");
  require(weights.beta >= 0.0, "beta must be >= 0");
  require(weights.lambda_model >= 0.0, "lambda_model must be >= 0");
  require(weights.gamma >= 0.0 || weights.gamma == -1.0, "gamma must be >= 0");
  if (kind == ModelKind::kBpr) return;
  require(catalog != nullptr, to_string(kind) + " needs a group catalog");
  const std::size_t a_count = catalog->num_groups();
  require(a_count >= 1, "group catalog is empty");
  if (is_dpr(kind)) {
    require(adv_lr > 0.0, "adv_lr must be > 0");
    require(theta_batches_per_round >= 1, "theta_batches_per_round must be >= 1");
    require(adv_layers == 0 || adv_hidden >= 1, "adv_hidden must be >= 1");
  }
  if (kind == ModelKind::kFatr) {
    require(a_count < dim, "FATR requires num_groups (" + std::to_string(a_count) +
                               ") < dim (" + std::to_string(dim) + ")");
  }
  if (is_reg(kind)) {
    require(a_count == 2, to_string(kind) + " supports exactly 2 groups, got " +
                              std::to_string(a_count));
  }
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,loss_bpr,loss_adv,loss_kl,val_f1_15,seconds\n";
  const auto old = out.precision(12);
  for (const auto& r : epochs) {
    out << r.epoch << ',' << r.loss_bpr << ',' << r.loss_adv << ',' << r.loss_kl << ',';
    if (r.val_f1_15) out << *r.val_f1_15;
    out << ',' << r.seconds << '\n';
  }
  out.precision(old);
}

Trainer::Trainer(TrainConfig config, const InteractionDataset& dataset,
                 const GroupCatalog* catalog)
    : cfg_(std::move(config)),
      ds_(dataset),
      catalog_(catalog),
      theta_rng_(derive_seed(cfg_.seed, kThetaStream)),
      psi_rng_(derive_seed(cfg_.seed, kPsiStream)),
      user_grad_(dataset.num_users, cfg_.dim),
      item_grad_(dataset.num_items, cfg_.dim) {
  cfg_.validate(catalog_);
  if (catalog_ != nullptr && catalog_->num_items() != ds_.num_items) {
    throw ConfigError("group catalog covers " + std::to_string(catalog_->num_items()) +
                      " items but the dataset has " + std::to_string(ds_.num_items));
  }
  params_ = cfg_.kind == ModelKind::kFatr
                ? init_fatr_params(ds_.num_users, *catalog_, cfg_.dim, cfg_.seed)
                : init_params(ds_.num_users, ds_.num_items, cfg_.dim, cfg_.seed);
  user_adam_ = AdamState(ds_.num_users, cfg_.dim);
  item_adam_ = AdamState(ds_.num_items, cfg_.dim);
  item_adam_.set_update_cols(params_.free_item_dims());
  if (is_dpr(cfg_.kind)) {
    psi_ = init_adversary(cfg_.adv_layers, cfg_.adv_hidden, catalog_->num_groups(), psi_rng_);
    psi_opt_ = AdversaryOptimizer(psi_);
  }
  train_pairs_ = ds_.train_pairs();
  if (train_pairs_.empty()) throw Error("training split is empty");
}

BatchLosses Trainer::theta_step(std::span<const Interaction> positives,
                                std::span<const Triple> triples, const StepOptions& options) {
  return batch_objective(positives, triples, options, true);
}

BatchLosses Trainer::theta_losses(std::span<const Interaction> positives,
                                  std::span<const Triple> triples, const StepOptions& options) {
  return batch_objective(positives, triples, options, false);
}

BatchLosses Trainer::batch_objective(std::span<const Interaction> positives,
                                     std::span<const Triple> triples,
                                     const StepOptions& options, bool apply) {
  BatchLosses out;
  if (triples.empty()) return out;
  const std::size_t d = cfg_.dim;
  const std::size_t d_free = params_.free_item_dims();
  const auto& P = params_.user_factors;
  const auto& Q = params_.item_factors;
  const std::size_t n_pos = positives.size();
  const std::size_t n_trip = triples.size();
  const double inv_t = 1.0 / static_cast<double>(n_trip);
  const double inv_p = 1.0 / static_cast<double>(n_pos);

  // Scored pairs: positives first, then one negative per triple.
  const std::size_t n_slots = n_pos + n_trip;
  std::vector<UserId> su(n_slots);
  std::vector<ItemId> si(n_slots);
  std::vector<double> y(n_slots);
  std::vector<double> dy(n_slots, 0.0);
  for (std::size_t p = 0; p < n_pos; ++p) {
    su[p] = positives[p].user;
    si[p] = positives[p].item;
  }
  for (std::size_t t = 0; t < n_trip; ++t) {
    su[n_pos + t] = triples[t].u;
    si[n_pos + t] = triples[t].j;
  }
  for (std::size_t s = 0; s < n_slots; ++s) {
    y[s] = dot(P.row(su[s]).data(), Q.row(si[s]).data(), d);
  }
  // Triple -> positive slot.
  std::vector<std::size_t> pos_slot(n_trip);
  {
    std::size_t p = 0;
    for (std::size_t t = 0; t < n_trip; ++t) {
      while (p < n_pos && (positives[p].user != triples[t].u || positives[p].item != triples[t].i)) ++p;
      if (p == n_pos) throw Error("theta step: triple does not match the positive list order");
      pos_slot[t] = p;
    }
  }

  const bool fair_terms = !options.pretrain;
  const double l2 = cfg_.kind == ModelKind::kBpr || is_dpr(cfg_.kind) ? cfg_.weights.lambda_theta
                                                                       : cfg_.weights.baseline_l2();

  if (options.bpr_term) {
    for (std::size_t t = 0; t < n_trip; ++t) {
      const auto pl = bpr_pair_loss(y[pos_slot[t]], y[n_pos + t]);
      out.bpr += pl.loss * inv_t;
      dy[pos_slot[t]] += pl.d_pos * inv_t;
      dy[n_pos + t] += pl.d_neg * inv_t;
    }
  }

  if (is_dpr(cfg_.kind) && fair_terms && cfg_.weights.alpha > 0.0) {
    const std::size_t n_adv = targets_all_pairs(cfg_.kind) ? n_slots : n_pos;
    std::vector<double> ll(n_adv);
    std::vector<double> dll(n_adv);
    kernels::adversary_input_gradient(psi_, std::span<const double>(y).first(n_adv),
                                      std::span<const ItemId>(si).first(n_adv), *catalog_,
                                      ll, dll);
    for (std::size_t s = 0; s < n_adv; ++s) {
      const double w = s < n_pos ? inv_p : inv_t;
      out.adv += w * ll[s];
      dy[s] += cfg_.weights.alpha * w * dll[s];
    }
  }

  if (fair_terms && cfg_.weights.beta > 0.0) {
    std::vector<std::size_t> order(n_slots);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return su[a] < su[b]; });
    std::size_t users = 0;
    double kl_sum = 0.0;
    std::vector<std::pair<std::size_t, ScoresLoss>> per_user;
    std::vector<double> buf;
    for (std::size_t b = 0; b < n_slots;) {
      std::size_t e = b;
      while (e < n_slots && su[order[e]] == su[order[b]]) ++e;
      buf.clear();
      for (std::size_t k = b; k < e; ++k) buf.push_back(y[order[k]]);
      ScoresLoss kl = kl_loss_user(buf);
      kl_sum += kl.loss;
      ++users;
      per_user.emplace_back(b, std::move(kl));
      b = e;
    }
    const double w = cfg_.weights.beta / static_cast<double>(users);
    for (const auto& [b, kl] : per_user) {
      for (std::size_t k = 0; k < kl.grad.size(); ++k) dy[order[b + k]] += w * kl.grad[k];
    }
    out.kl = kl_sum / static_cast<double>(users);
  }

  if (is_reg(cfg_.kind) && fair_terms && cfg_.weights.lambda_model > 0.0) {
    const std::size_t n_reg = targets_all_pairs(cfg_.kind) ? n_slots : n_pos;
    std::vector<double> s1;
    std::vector<double> s2;
    std::vector<std::size_t> i1;
    std::vector<std::size_t> i2;
    for (std::size_t s = 0; s < n_reg; ++s) {
      if (catalog_->member(si[s], 0)) {
        s1.push_back(y[s]);
        i1.push_back(s);
      }
      if (catalog_->member(si[s], 1)) {
        s2.push_back(y[s]);
        i2.push_back(s);
      }
    }
    const MeanGapLoss gap = mean_gap_penalty(s1, s2);
    if (gap.degenerate) {
      ++degenerate_batches_;
      spdlog::debug("{}: a group is absent from the batch; penalty skipped", to_string(cfg_.kind));
    }
    out.model = gap.loss;
    const double lam = cfg_.weights.lambda_model;
    for (std::size_t k = 0; k < i1.size(); ++k) dy[i1[k]] += lam * gap.grad_first[k];
    for (std::size_t k = 0; k < i2.size(); ++k) dy[i2[k]] += lam * gap.grad_second[k];
  }

  std::optional<MatrixLoss> fatr;
  if (cfg_.kind == ModelKind::kFatr && cfg_.weights.lambda_model > 0.0) {
    const auto m = Q.rows();
    const auto a = static_cast<Eigen::Index>(params_.frozen_item_dims);
    const auto f = static_cast<Eigen::Index>(d_free);
    fatr = fatr_reg(Q.block(0, 0, m, f), Q.block(0, f, m, a));
    out.model = fatr->loss;
  }

  // L2 on touched rows, once per triple.
  if (l2 > 0.0) {
    for (const auto& t : triples) {
      out.l2 += 0.5 * l2 * inv_t *
                (squared_norm(P.row(t.u).data(), d) + squared_norm(Q.row(t.i).data(), d_free) +
                 squared_norm(Q.row(t.j).data(), d_free));
    }
  }

  out.total = out.bpr + out.l2 + cfg_.weights.alpha * (fair_terms && is_dpr(cfg_.kind) ? out.adv : 0.0) +
              (fair_terms ? cfg_.weights.beta * out.kl + cfg_.weights.lambda_model * out.model : 0.0);
  if (!std::isfinite(out.total)) {
    throw Error("training diverged: non-finite batch loss");
  }
  if (!apply) return out;

  user_grad_.clear();
  item_grad_.clear();
  if (l2 > 0.0) {
    for (const auto& t : triples) {
      add_scaled(user_grad_.row(t.u), P.row(t.u).data(), l2 * inv_t);
      add_scaled(item_grad_.row(t.i).first(d_free), Q.row(t.i).data(), l2 * inv_t);
      add_scaled(item_grad_.row(t.j).first(d_free), Q.row(t.j).data(), l2 * inv_t);
    }
  }
  for (std::size_t s = 0; s < n_slots; ++s) {
    if (dy[s] == 0.0) continue;
    add_scaled(user_grad_.row(su[s]), Q.row(si[s]).data(), dy[s]);
    add_scaled(item_grad_.row(si[s]), P.row(su[s]).data(), dy[s]);
  }

  user_adam_.step_sparse(params_.user_factors, user_grad_, cfg_.lr, "user_factors");
  if (fatr) {
    RowMatrix dense = RowMatrix::Zero(Q.rows(), Q.cols());
    dense.leftCols(static_cast<Eigen::Index>(d_free)) = cfg_.weights.lambda_model * fatr->grad;
    for (std::size_t slot = 0; slot < item_grad_.touched().size(); ++slot) {
      const auto vals = item_grad_.values(slot);
      const auto r = static_cast<Eigen::Index>(item_grad_.touched()[slot]);
      for (std::size_t c = 0; c < d; ++c) dense(r, static_cast<Eigen::Index>(c)) += vals[c];
    }
    item_adam_.step_dense(params_.item_factors, dense, cfg_.lr, "item_factors");
  } else {
    item_adam_.step_sparse(params_.item_factors, item_grad_, cfg_.lr, "item_factors");
  }
  return out;
}

double Trainer::psi_sweep() {
  std::vector<Interaction> pairs = train_pairs_;
  std::shuffle(pairs.begin(), pairs.end(), psi_rng_);
  const bool both = targets_all_pairs(cfg_.kind);
  std::vector<double> scores;
  std::vector<ItemId> items;
  double ll_sum = 0.0;
  std::size_t samples = 0;
  AdversaryParams grad;
  for (std::size_t b = 0; b < pairs.size(); b += cfg_.batch_size) {
    const std::size_t e = std::min(pairs.size(), b + cfg_.batch_size);
    scores.clear();
    items.clear();
    for (std::size_t k = b; k < e; ++k) {
      scores.push_back(score(params_, pairs[k].user, pairs[k].item));
      items.push_back(pairs[k].item);
    }
    if (both) {
      for (std::size_t k = b; k < e; ++k) {
        const ItemId j = sample_negative(ds_, pairs[k].user, psi_rng_);
        scores.push_back(score(params_, pairs[k].user, j));
        items.push_back(j);
      }
    }
    const double mean_ll = kernels::adversary_batch_gradient(psi_, scores, items, *catalog_, grad);
    psi_opt_.ascend(psi_, grad, cfg_.adv_lr);
    ll_sum += mean_ll * static_cast<double>(scores.size());
    samples += scores.size();
  }
  sweep_samples_.push_back(samples);
  const double mean = ll_sum / static_cast<double>(samples);
  const double threshold = -0.1 * static_cast<double>(catalog_->num_groups()) * std::log(2.0);
  high_adv_streak_ = mean > threshold ? high_adv_streak_ + 1 : 0;
  if (high_adv_streak_ == kCollapseSweeps) {
    spdlog::warn("adversary log-likelihood above {:.4f} for {} consecutive sweeps", threshold,
                 kCollapseSweeps);
  }
  return mean;
}

double Trainer::validation_f1() const {
  const RankingResult r = rank_topk(params_, ds_, kValidationK, Exclusion::kTrain);
  return f1_at_k(r, ds_.val_pos, kValidationK);
}

TrainResult Trainer::run(const TrainHooks& hooks) {
  using Clock = std::chrono::steady_clock;
  const bool dpr = is_dpr(cfg_.kind);
  const bool have_val = std::any_of(ds_.val_pos.begin(), ds_.val_pos.end(),
                                    [](const auto& v) { return !v.empty(); });
  if (!have_val && cfg_.checkpoint_select == CheckpointSelect::kBest) {
    spdlog::info("no validation positives; keeping the last epoch");
  }
  TrainResult result;
  std::optional<double> best_f1;
  MfParams best_params;
  AdversaryParams best_psi;
  std::size_t best_epoch = 0;

  std::vector<Interaction> order = train_pairs_;
  std::vector<Triple> triples;
  for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    const auto t0 = Clock::now();
    const bool pretrain = dpr && epoch <= cfg_.pretrain_epochs;
    const bool adversarial = dpr && !pretrain && cfg_.weights.alpha > 0.0;
    std::shuffle(order.begin(), order.end(), theta_rng_);
    degenerate_batches_ = 0;
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg_.batch_size) {
      if (adversarial && batches % cfg_.theta_batches_per_round == 0) psi_sweep();
      const std::size_t e = std::min(order.size(), b + cfg_.batch_size);
      std::span<const Interaction> positives(order.data() + b, e - b);
      triples.clear();
      for (const auto& pos : positives) {
        for (std::size_t n = 0; n < cfg_.negative_rate; ++n) {
          triples.push_back({pos.user, pos.item, sample_negative(ds_, pos.user, theta_rng_)});
        }
      }
      StepOptions opt;
      opt.pretrain = pretrain;
      const BatchLosses l = theta_step(positives, triples, opt);
      rec.loss_bpr += l.bpr;
      rec.loss_adv += l.adv;
      rec.loss_kl += l.kl;
      ++batches;
    }
    rec.loss_bpr /= static_cast<double>(batches);
    rec.loss_adv /= static_cast<double>(batches);
    rec.loss_kl /= static_cast<double>(batches);
    if (degenerate_batches_ > 0) {
      spdlog::info("epoch {}: {} batches lacked a group; penalty skipped", epoch,
                   degenerate_batches_);
    }
    user_adam_.sync(params_.user_factors);
    item_adam_.sync(params_.item_factors);

    if (have_val && (epoch % cfg_.eval_every == 0 || epoch == cfg_.epochs)) {
      rec.val_f1_15 = validation_f1();
      const bool eligible = !pretrain || cfg_.pretrain_epochs >= cfg_.epochs;
      if (eligible && (!best_f1 || *rec.val_f1_15 > *best_f1)) {
        best_f1 = rec.val_f1_15;
        best_params = params_;
        if (dpr) best_psi = psi_;
        best_epoch = epoch;
      }
    }
    if (cfg_.record_wall_time) {
      rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    spdlog::debug("epoch {} bpr={:.5f} adv={:.5f} kl={:.5f}", epoch, rec.loss_bpr, rec.loss_adv,
                  rec.loss_kl);
    result.log.epochs.push_back(rec);
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, params_);
  }

  if (cfg_.checkpoint_select == CheckpointSelect::kBest && best_f1) {
    result.params = std::move(best_params);
    if (dpr) result.adversary = std::move(best_psi);
    result.selected_epoch = best_epoch;
  } else {
    result.params = params_;
    if (dpr) result.adversary = psi_;
    result.selected_epoch = cfg_.epochs;
  }
  result.psi_samples_per_sweep = sweep_samples_;
  return result;
}

}  // namespace fairrank
