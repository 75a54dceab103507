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

#include "fairrank/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace fairrank::kernels {

namespace {

using ColMatrix = Eigen::MatrixXd;

double clamped_log(double p) { return std::log(std::clamp(p, kProbClamp, 1.0 - kProbClamp)); }

// Batched forward/backward over one chunk of samples stored column-wise.
struct ChunkPass {
  std::vector<ColMatrix> pre;  // pre-activation per layer
  ColMatrix probs;
  ColMatrix delta_out;  // g - p
  Eigen::RowVectorXd loss;
};

void forward_chunk(const AdversaryParams& psi, std::span<const double> scores,
                   std::span<const ItemId> items, const GroupCatalog& catalog,
                   ChunkPass& pass) {
  const auto n = static_cast<Eigen::Index>(scores.size());
  ColMatrix act = Eigen::Map<const Eigen::RowVectorXd>(scores.data(), n);
  pass.pre.resize(psi.layers.size());
  for (std::size_t k = 0; k < psi.layers.size(); ++k) {
    const auto& l = psi.layers[k];
    pass.pre[k].noalias() = l.weight * act;
    pass.pre[k].colwise() += l.bias;
    if (k + 1 < psi.layers.size()) act = pass.pre[k].cwiseMax(0.0);
  }
  const auto& z = pass.pre.back();
  const Eigen::Index a_count = z.rows();
  pass.probs.resize(a_count, n);
  pass.delta_out.resize(a_count, n);
  pass.loss.resize(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto g = catalog.groups_of(items[static_cast<std::size_t>(s)]);
    double ll = 0.0;
    for (Eigen::Index a = 0; a < a_count; ++a) {
      const double zz = z(a, s);
      const double p = zz >= 0 ? 1.0 / (1.0 + std::exp(-zz)) : std::exp(zz) / (1.0 + std::exp(zz));
      pass.probs(a, s) = p;
      const bool member = g[static_cast<std::size_t>(a)] != 0;
      ll += member ? clamped_log(p) : clamped_log(1.0 - p);
      pass.delta_out(a, s) = (member ? 1.0 : 0.0) - p;
    }
    pass.loss(s) = ll;
  }
}

// Back-propagates delta_out. Accumulates parameter gradients into `grad` when
// non-null and returns d loss / d input per sample.
Eigen::RowVectorXd backward_chunk(const AdversaryParams& psi, std::span<const double> scores,
                                  const ChunkPass& pass, AdversaryParams* grad) {
  const auto n = static_cast<Eigen::Index>(scores.size());
  ColMatrix delta = pass.delta_out;
  for (std::size_t k = psi.layers.size(); k-- > 0;) {
    const auto& l = psi.layers[k];
    if (grad != nullptr) {
      auto& gl = grad->layers[k];
      if (k == 0) {
        gl.weight.noalias() += delta * Eigen::Map<const Eigen::VectorXd>(scores.data(), n);
      } else {
        gl.weight.noalias() += delta * pass.pre[k - 1].cwiseMax(0.0).transpose();
      }
      gl.bias += delta.rowwise().sum();
    }
    ColMatrix prev = l.weight.transpose() * delta;
    if (k == 0) return prev.row(0);
    delta = prev.cwiseProduct((pass.pre[k - 1].array() > 0.0).cast<double>().matrix());
  }
  return {};
}

void add_into(AdversaryParams& acc, const AdversaryParams& part) {
  for (std::size_t k = 0; k < acc.layers.size(); ++k) {
    acc.layers[k].weight += part.layers[k].weight;
    acc.layers[k].bias += part.layers[k].bias;
  }
}

void scale(AdversaryParams& p, double f) {
  for (auto& l : p.layers) {
    l.weight *= f;
    l.bias *= f;
  }
}

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

void check_sizes(std::span<const double> scores, std::span<const ItemId> items) {
  if (scores.size() != items.size()) throw Error("adversary kernel: scores/items size mismatch");
}

struct Candidate {
  double score;
  ItemId item;
};

bool ranks_before(const Candidate& a, const Candidate& b) {
  return a.score > b.score || (a.score == b.score && a.item < b.item);
}

void collect_candidates(const MfParams& params, const InteractionDataset& dataset,
                        UserId u, bool exclude_val, std::vector<double>& scores,
                        std::vector<Candidate>& cands) {
  score_all(params, u, scores);
  cands.clear();
  const auto& tr = dataset.train_pos[u];
  const auto& va = dataset.val_pos[u];
  auto ti = tr.begin();
  auto vi = va.begin();
  for (std::size_t i = 0; i < dataset.num_items; ++i) {
    const auto item = static_cast<ItemId>(i);
    while (ti != tr.end() && *ti < item) ++ti;
    if (ti != tr.end() && *ti == item) continue;
    if (exclude_val) {
      while (vi != va.end() && *vi < item) ++vi;
      if (vi != va.end() && *vi == item) continue;
    }
    cands.push_back({scores[i], item});
  }
}

}  // namespace

double adversary_batch_gradient(const AdversaryParams& psi, std::span<const double> scores,
                                std::span<const ItemId> items, const GroupCatalog& catalog,
                                AdversaryParams& grad) {
  check_sizes(scores, items);
  grad = psi.zeros_like();
  if (scores.empty()) return 0.0;
  const std::size_t chunks = chunk_count(scores.size());
  std::vector<AdversaryParams> partial(chunks);
  std::vector<double> partial_loss(chunks, 0.0);

#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = c * kChunk;
    const std::size_t len = std::min(kChunk, scores.size() - begin);
    auto s = scores.subspan(begin, len);
    auto it = items.subspan(begin, len);
    ChunkPass pass;
    forward_chunk(psi, s, it, catalog, pass);
    partial[c] = psi.zeros_like();
    backward_chunk(psi, s, pass, &partial[c]);
    partial_loss[c] = pass.loss.sum();
  }

  double loss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    add_into(grad, partial[c]);
    loss += partial_loss[c];
  }
  const double inv = 1.0 / static_cast<double>(scores.size());
  scale(grad, inv);
  return loss * inv;
}

void adversary_input_gradient(const AdversaryParams& psi, std::span<const double> scores,
                              std::span<const ItemId> items, const GroupCatalog& catalog,
                              std::span<double> loss, std::span<double> d_input) {
  check_sizes(scores, items);
  const std::size_t chunks = chunk_count(scores.size());
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = c * kChunk;
    const std::size_t len = std::min(kChunk, scores.size() - begin);
    auto s = scores.subspan(begin, len);
    ChunkPass pass;
    forward_chunk(psi, s, items.subspan(begin, len), catalog, pass);
    const Eigen::RowVectorXd d = backward_chunk(psi, s, pass, nullptr);
    for (std::size_t j = 0; j < len; ++j) {
      loss[begin + j] = pass.loss(static_cast<Eigen::Index>(j));
      d_input[begin + j] = d(static_cast<Eigen::Index>(j));
    }
  }
}

std::vector<std::vector<ItemId>> topk_lists(const MfParams& params,
                                            const InteractionDataset& dataset,
                                            std::size_t k, bool exclude_val) {
  std::vector<std::vector<ItemId>> lists(dataset.num_users);
  const auto n_users = static_cast<std::ptrdiff_t>(dataset.num_users);
#pragma omp parallel
  {
    std::vector<double> scores(dataset.num_items);
    std::vector<Candidate> cands;
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t uu = 0; uu < n_users; ++uu) {
      const auto u = static_cast<UserId>(uu);
      collect_candidates(params, dataset, u, exclude_val, scores, cands);
      const std::size_t take = std::min(k, cands.size());
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take),
                        cands.end(), ranks_before);
      auto& out = lists[u];
      out.resize(take);
      for (std::size_t r = 0; r < take; ++r) out[r] = cands[r].item;
    }
  }
  return lists;
}

namespace serial {

double adversary_batch_gradient(const AdversaryParams& psi, std::span<const double> scores,
                                std::span<const ItemId> items, const GroupCatalog& catalog,
                                AdversaryParams& grad) {
  check_sizes(scores, items);
  grad = psi.zeros_like();
  double loss = 0.0;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    auto back = adv_backward(psi, scores[s], catalog.groups_of(items[s]));
    add_into(grad, back.grad);
    loss += back.loss;
  }
  if (scores.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(scores.size());
  scale(grad, inv);
  return loss * inv;
}

void adversary_input_gradient(const AdversaryParams& psi, std::span<const double> scores,
                              std::span<const ItemId> items, const GroupCatalog& catalog,
                              std::span<double> loss, std::span<double> d_input) {
  check_sizes(scores, items);
  for (std::size_t s = 0; s < scores.size(); ++s) {
    auto back = adv_backward(psi, scores[s], catalog.groups_of(items[s]));
    loss[s] = back.loss;
    d_input[s] = back.d_input;
  }
}

std::vector<std::vector<ItemId>> topk_lists(const MfParams& params,
                                            const InteractionDataset& dataset,
                                            std::size_t k, bool exclude_val) {
  std::vector<std::vector<ItemId>> lists(dataset.num_users);
  std::vector<double> scores(dataset.num_items);
  std::vector<Candidate> cands;
  for (std::size_t u = 0; u < dataset.num_users; ++u) {
    collect_candidates(params, dataset, static_cast<UserId>(u), exclude_val, scores, cands);
    std::sort(cands.begin(), cands.end(), ranks_before);
    const std::size_t take = std::min(k, cands.size());
    for (std::size_t r = 0; r < take; ++r) lists[u].push_back(cands[r].item);
  }
  return lists;
}

}  // namespace serial
}  // namespace fairrank::kernels
